"""
Where can movement eradicate the disease?
=========================================

For two patches sharing the exposed-class parameters and ``beta``, the
reduced R0 depends on ``x = m_1^E`` and ``y = m_1^I`` through
``A * g(x, y)``. Its level set at 1 is a straight line. Eradication is
possible only when one of the off-diagonal corners lies below it.
"""

import numpy as np

from episcale import (
    TwoPatchInfectiousParams,
    TwoPatchSharedParams,
    boundary_line,
    eradication_feasibility,
    region_sweep,
)

shared = TwoPatchSharedParams(sigma_E=0.99, gamma_E=0.9, beta=0.95)
ip = TwoPatchInfectiousParams(sigma1_I=0.9, gamma1_I=0.5, sigma2_I=0.95, gamma2_I=0.86)

res = eradication_feasibility(shared, ip)
print("verdict:", res.verdict.value, "| relabeled:", res.swapped)
print(f"g(1,0) = {res.g_10:.5f}, 1/A = {res.threshold:.5f}")

# %%
# Swapping patch labels moves the region to the opposite corner.

print("mirrored:", eradication_feasibility(shared, ip.swapped()).verdict.value)

# %%
# Sweep the unit square.

rep = region_sweep(shared, ip, resolution=201)
print("corners:", {k: round(float(v), 5) for k, v in rep.corners().items()})
print("fraction of the square with reduced R0 < 1:", rep.eradication_cells.mean())
a, b, c = boundary_line(shared, ip)
print(f"boundary: {a:.5f} x + {b:.5f} y = {c:.5f}, {len(rep.boundary)} vertices")

# %%
# Figure.

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(5, 4.5))
    X, Y = np.meshgrid(rep.xs, rep.ys, indexing="ij")
    cs = ax.contourf(X, Y, rep.r0_grid, levels=30, cmap="viridis")
    fig.colorbar(cs, ax=ax, label="reduced R0")
    ax.plot(rep.boundary[:, 0], rep.boundary[:, 1], "w-", lw=2)
    ax.plot([0.99], [0.01], "r*", ms=12)
    ax.set_xlabel("x = m1^E")
    ax.set_ylabel("y = m1^I")
    fig.tight_layout()
    fig.savefig("eradication_region.png", dpi=120)
    print("wrote eradication_region.png")
