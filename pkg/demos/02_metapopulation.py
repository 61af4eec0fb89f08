"""
Patches connected by fast movement
==================================

Between two disease steps, individuals move ``k`` times. Each compartment
has its own column-stochastic movement matrix: entry ``[i, j]`` is the
fraction going from patch ``j`` to patch ``i``.
"""

import numpy as np

from episcale import (
    Constant,
    EpidemicParams,
    MetapopModel,
    MovementModel,
    Standard,
    aggregate,
    dissipativity_bound,
    fast_iterate,
    metapop_state,
    simulate,
)


def patch(sigma_I, gamma_I):
    return EpidemicParams(
        sigma_S=0.95, sigma_E=0.99, sigma_I=sigma_I, sigma_R=0.95,
        gamma_E=0.9, gamma_I=gamma_I, gamma_R=0.1,
        transmission=Standard(0.95),
        recruitment=Constant(10.0),
    )


movement = MovementModel(
    M_S=[[0.8, 0.1], [0.2, 0.9]],
    M_E=[[0.999, 0.099], [0.001, 0.901]],
    M_I=[[0.901, 0.001], [0.099, 0.999]],
    M_R=[[0.7, 0.3], [0.3, 0.7]],
    k=64,
)
model = MetapopModel([patch(0.9, 0.5), patch(0.95, 0.86)], movement)

# %%
# Movement only redistributes. After many moves each compartment sits on the
# stationary distribution of its matrix.

x0 = metapop_state(S=[100, 100], E=[0, 0], I=[5, 5], R=[0, 0])
moved = fast_iterate(movement, x0, 200)
print("totals before:", aggregate(x0))
print("totals after: ", aggregate(moved))
print("S split after many moves:", moved[0] / moved[0].sum())

# %%
# The total population is eventually below ``B_hat / (1 - sigma_hat)``.

sigma_hat, B_hat, radius = dissipativity_bound(model)
print(f"sigma_hat={sigma_hat}, B_hat={B_hat}, radius={radius}")

traj = simulate(model, x0, 3000)
N = traj.sum(axis=(1, 2))
print("max N over the run:", N.max())

# %%
# Infection dies out in the coupled system, even though both patches are
# endemic on their own (see the next demo for why).

infected = traj[:, 1].sum(axis=1) + traj[:, 2].sum(axis=1)
for t in (0, 500, 1000, 2000, 3000):
    print(f"t={t:5d}  E+I={infected[t]:.3e}")
print("per-patch S at the end:", np.round(traj[-1, 0], 4))
