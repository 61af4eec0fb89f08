"""
A single patch
==============

One step of the local model applies infection and progression, then
survival and recruitment. Here we follow a patch from a small outbreak to
its long-run state, once below and once above the epidemic threshold.
"""

import numpy as np

from episcale import Constant, EpidemicParams, Standard, dfe_local, r0_local_closed, r0_next_generation, seirs_step

# %%
# Parameters are per-step fractions. ``sigma_*`` is survival, ``gamma_*`` the
# fraction leaving a class, and ``beta`` the transmission coefficient.


def patch(beta):
    return EpidemicParams(
        sigma_S=0.95, sigma_E=0.99, sigma_I=0.9, sigma_R=0.95,
        gamma_E=0.9, gamma_I=0.5, gamma_R=0.1,
        transmission=Standard(beta),
        recruitment=Constant(10.0),
    )


low, high = patch(0.55), patch(0.95)
for label, p in (("low", low), ("high", high)):
    print(f"{label:>4}: R0 = {r0_local_closed(p):.6f} (spectral {r0_next_generation(p):.6f})")

# %%
# Both patches share the disease-free equilibrium ``(B / (1 - sigma_S), 0, 0, 0)``.

print("DFE:", tuple(round(v, 6) for v in dfe_local(low)))

# %%
# Simulate 2000 steps from a few infectious individuals.


def run(p, steps=2000):
    x = (150.0, 0.0, 5.0, 0.0)
    out = [x]
    for _ in range(steps):
        x = seirs_step(p, x)
        out.append(x)
    return np.array(out)


traj_low, traj_high = run(low), run(high)
print("final E+I below threshold:", traj_low[-1, 1] + traj_low[-1, 2])
print("final E+I above threshold:", traj_high[-1, 1] + traj_high[-1, 2])

# %%
# Plot if matplotlib is around.

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.semilogy(traj_low[:, 1] + traj_low[:, 2], label="R0 < 1")
    ax.semilogy(traj_high[:, 1] + traj_high[:, 2], label="R0 > 1")
    ax.set_xlabel("t")
    ax.set_ylabel("E + I")
    ax.legend()
    fig.tight_layout()
    fig.savefig("local_seirs.png", dpi=120)
    print("wrote local_seirs.png")
