"""Spectral utilities, long-run classification, and the two-patch eradication region.

For two patches that share the exposed-class parameters and the transmission
coefficient, the reduced reproduction number at stationary fractions
``x = m_1^E`` and ``y = m_1^I`` factors as ``A * g(x, y)``, where ``g`` is a
ratio of affine functions. Its level set ``A g = 1`` is therefore a straight
line through the unit square.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from ._linalg import spectral_radius_2x2
from .errors import NumericalFailure, ParameterError

__all__ = [
    "spectral_radius",
    "Verdict",
    "infected_mass",
    "classify_asymptotics",
    "TwoPatchSharedParams",
    "TwoPatchInfectiousParams",
    "two_patch_A",
    "two_patch_local_r0",
    "two_patch_g",
    "two_patch_r0_bar",
    "Feasibility",
    "FeasibilityResult",
    "eradication_feasibility",
    "RegionReport",
    "region_sweep",
    "boundary_line",
]


# --------------------------------------------------------------------------
# spectral radius
# --------------------------------------------------------------------------


def _power_radius(M, tol, max_iter, rng):
    n = M.shape[0]
    v = np.abs(rng.standard_normal(n)) + 1.0
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        lam = float(v @ w)
        # accept when v is an eigenvector to tolerance
        if np.linalg.norm(w - lam * v) <= tol * max(1.0, abs(lam)):
            return abs(lam)
        v = w / nw
    return None


def spectral_radius(M, tol=1e-12, max_iter=100_000):
    """Largest eigenvalue modulus of a square nonnegative matrix.

    1x1 and 2x2 matrices use closed forms. Larger ones use power iteration
    with Rayleigh-quotient acceptance; if plain iteration stalls (e.g. a
    periodic matrix) the shift ``M + I`` is tried, whose Perron root is
    ``rho(M) + 1`` for nonnegative ``M``.

    Raises
    ------
    NumericalFailure
        if neither iteration converges within ``max_iter`` steps.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParameterError(f"spectral_radius needs a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ParameterError("spectral_radius needs finite entries")
    n = M.shape[0]
    if n == 1:
        return abs(float(M[0, 0]))
    if n == 2:
        return float(spectral_radius_2x2(M))
    rng = np.random.default_rng(0)
    r = _power_radius(M, tol, max_iter, rng)
    if r is not None:
        return r
    if np.all(M >= 0):
        r = _power_radius(M + np.eye(n), tol, max_iter, rng)
        if r is not None:
            return r - 1.0
    raise NumericalFailure(f"power iteration did not converge in {max_iter} iterations")


# --------------------------------------------------------------------------
# classification of long-run behaviour
# --------------------------------------------------------------------------


class Verdict(enum.Enum):
    ERADICATION = "eradication"
    PERSISTENCE = "persistence"
    UNDETERMINED = "undetermined"


def infected_mass(x):
    """``E + I`` of a local state, global state, or ``(4, n)`` metapopulation state."""
    if hasattr(x, "E") and hasattr(x, "I"):
        return float(x.E + x.I)
    a = np.asarray(x, dtype=float)
    if a.shape[0] != 4:
        raise ParameterError(f"cannot read E and I from state of shape {a.shape}")
    return float(np.sum(a[1]) + np.sum(a[2]))


def classify_asymptotics(
    step,
    x0,
    horizon=10_000,
    eps_eradicate=1e-8,
    eps_persist=1e-4,
    tail_fraction=0.5,
):
    """Run ``horizon`` steps and decide between eradication and persistence.

    Eradication when ``E + I < eps_eradicate`` at the last step; persistence
    when the minimum of ``E + I`` over the last ``tail_fraction`` of the
    orbit exceeds ``eps_persist``; undetermined otherwise.
    """
    if not eps_eradicate < eps_persist:
        raise ParameterError("eps_eradicate must be smaller than eps_persist")
    if not 0.0 < tail_fraction <= 1.0:
        raise ParameterError("tail_fraction must lie in (0, 1]")
    if horizon < 1:
        raise ParameterError("horizon must be >= 1")
    tail_start = horizon - int(math.floor(tail_fraction * horizon))
    x = x0
    tail_min = infected_mass(x) if tail_start == 0 else math.inf
    for t in range(1, horizon + 1):
        x = step(x)
        if t >= tail_start:
            tail_min = min(tail_min, infected_mass(x))
    if infected_mass(x) < eps_eradicate:
        return Verdict.ERADICATION
    if tail_min > eps_persist:
        return Verdict.PERSISTENCE
    return Verdict.UNDETERMINED


# --------------------------------------------------------------------------
# two-patch eradication region
# --------------------------------------------------------------------------


def _open_unit(name, v):
    if not (isinstance(v, (int, float)) and 0.0 < v < 1.0):
        raise ParameterError(f"{name} must lie in (0, 1), got {v!r}")


@dataclass(frozen=True)
class TwoPatchSharedParams:
    """Exposed-class survival and transition, and transmission, common to both patches."""

    sigma_E: float
    gamma_E: float
    beta: float

    def __post_init__(self):
        _open_unit("sigma_E", self.sigma_E)
        _open_unit("gamma_E", self.gamma_E)
        if not (isinstance(self.beta, (int, float)) and 0.0 < self.beta <= 1.0):
            raise ParameterError(f"beta must lie in (0, 1], got {self.beta!r}")


@dataclass(frozen=True)
class TwoPatchInfectiousParams:
    sigma1_I: float
    gamma1_I: float
    sigma2_I: float
    gamma2_I: float

    def __post_init__(self):
        for name in ("sigma1_I", "gamma1_I", "sigma2_I", "gamma2_I"):
            _open_unit(name, getattr(self, name))

    def swapped(self):
        return TwoPatchInfectiousParams(self.sigma2_I, self.gamma2_I, self.sigma1_I, self.gamma1_I)

    @property
    def exit_rates(self):
        """``1 - sigma_j (1 - gamma_j)``: per-step loss from the infectious class."""
        return (
            1.0 - self.sigma1_I * (1.0 - self.gamma1_I),
            1.0 - self.sigma2_I * (1.0 - self.gamma2_I),
        )


def two_patch_A(shared):
    s, g, b = shared.sigma_E, shared.gamma_E, shared.beta
    return s * g * b / (1.0 - s * (1.0 - g))


def two_patch_local_r0(shared, ip):
    """Isolated-patch reproduction numbers ``(R0_1, R0_2)``."""
    A = two_patch_A(shared)
    d1, d2 = ip.exit_rates
    return A * ip.sigma1_I / d1, A * ip.sigma2_I / d2


def two_patch_g(x, y, ip):
    """Ratio factor of the reduced reproduction number; vectorizes over ``x`` and ``y``."""
    d1, d2 = ip.exit_rates
    return (ip.sigma1_I * x + ip.sigma2_I * (1.0 - x)) / (d1 * y + d2 * (1.0 - y))


def two_patch_r0_bar(x, y, shared, ip):
    return two_patch_A(shared) * two_patch_g(x, y, ip)


class Feasibility(enum.Enum):
    NONE = "none"
    UNDER_LINE = "under_line"
    OVER_LINE = "over_line"


class FeasibilityResult(NamedTuple):
    verdict: Feasibility
    swapped: bool  # True if patches were relabeled so that R0_1 >= R0_2
    r0_1: float
    r0_2: float
    g_10: float
    g_01: float
    threshold: float  # 1 / A


def eradication_feasibility(shared, ip):
    """Can some pair of stationary fractions make the reduced R0 drop below 1?

    Requires both isolated patches to be endemic. The verdict is expressed in
    the caller's patch labels: ``UNDER_LINE`` means the eradicating pairs lie
    towards ``(x, y) = (1, 0)`` (below the line ``A g = 1``), ``OVER_LINE``
    towards ``(0, 1)``. Internally the patches are relabeled so that patch 1
    has the larger local R0; ``swapped`` reports whether that happened.
    """
    r1, r2 = two_patch_local_r0(shared, ip)
    if min(r1, r2) <= 1.0:
        raise ParameterError(
            f"both isolated patches must be endemic (R0_1={r1:.6g}, R0_2={r2:.6g})"
        )
    swapped = r2 > r1
    work = ip.swapped() if swapped else ip
    A = two_patch_A(shared)
    threshold = 1.0 / A
    g10 = two_patch_g(1.0, 0.0, work)
    g01 = two_patch_g(0.0, 1.0, work)
    under, over = g10 < threshold, g01 < threshold
    if under and over:
        raise NumericalFailure("both corner conditions hold; this cannot happen for valid parameters")
    if under:
        verdict = Feasibility.UNDER_LINE
    elif over:
        verdict = Feasibility.OVER_LINE
    else:
        verdict = Feasibility.NONE
    if swapped:
        # (x, y) -> (1 - x, 1 - y) exchanges the two half-planes
        verdict = {
            Feasibility.UNDER_LINE: Feasibility.OVER_LINE,
            Feasibility.OVER_LINE: Feasibility.UNDER_LINE,
        }.get(verdict, verdict)
        g10, g01 = g01, g10
    return FeasibilityResult(verdict, swapped, r1, r2, g10, g01, threshold)


def boundary_line(shared, ip):
    """Coefficients ``(a, b, c)`` with ``A g(x, y) = 1  <=>  a x + b y = c``."""
    A = two_patch_A(shared)
    d1, d2 = ip.exit_rates
    # A (s2 + (s1 - s2) x) = d2 + (d1 - d2) y
    return A * (ip.sigma1_I - ip.sigma2_I), -(d1 - d2), d2 - A * ip.sigma2_I


@dataclass(frozen=True, eq=False)
class RegionReport:
    """Sampled reduced R0 over the unit square and its level set at 1.

    ``r0_grid[i, j]`` is the value at ``(xs[i], ys[j])``; ``boundary`` is an
    ``(m, 2)`` array of ``(x, y)`` vertices ordered along the curve.
    """

    A: float
    r0_1: float
    r0_2: float
    feasibility: Feasibility
    endemic_in_isolation: bool
    xs: np.ndarray
    ys: np.ndarray
    r0_grid: np.ndarray
    boundary: np.ndarray
    boundary_tol: float

    @property
    def eradication_cells(self):
        return self.r0_grid < 1.0

    def corners(self):
        g = self.r0_grid
        return {"00": g[0, 0], "10": g[-1, 0], "01": g[0, -1], "11": g[-1, -1]}


def _edge_roots(f, nodes, values):
    """Roots of ``f - 1`` on consecutive grid intervals where it changes sign."""
    out = []
    for a, b, va, vb in zip(nodes[:-1], nodes[1:], values[:-1], values[1:]):
        fa, fb = va - 1.0, vb - 1.0
        if fa == 0.0:
            out.append(a)
        elif fa * fb < 0.0:
            out.append(brentq(lambda t: f(t) - 1.0, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    if values.size and values[-1] - 1.0 == 0.0:
        out.append(nodes[-1])
    return out


def region_sweep(shared, ip, resolution=201, boundary_tol=1e-9, workers=None):
    """Sample the reduced R0 on a uniform grid and trace its level set at 1.

    Boundary vertices are found by bisection along every grid edge whose
    endpoints straddle 1 and are ordered along the (straight) level set.
    ``workers`` splits the grid rows across threads; results do not depend on it.
    """
    if resolution < 2:
        raise ParameterError("resolution must be >= 2")
    A = two_patch_A(shared)
    r1, r2 = two_patch_local_r0(shared, ip)
    try:
        feas = eradication_feasibility(shared, ip).verdict
        endemic = True
    except ParameterError:
        feas, endemic = Feasibility.NONE, False

    xs = np.linspace(0.0, 1.0, resolution)
    ys = np.linspace(0.0, 1.0, resolution)
    grid = np.empty((resolution, resolution))

    def fill(rows):
        for i in rows:
            grid[i, :] = A * two_patch_g(xs[i], ys, ip)

    chunks = np.array_split(np.arange(resolution), max(1, workers or 1))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, chunks))
    else:
        fill(range(resolution))

    pts = set()
    for i, x in enumerate(xs):
        for y in _edge_roots(lambda t: A * two_patch_g(x, t, ip), ys, grid[i, :]):
            pts.add((float(x), float(y)))
    for j, y in enumerate(ys):
        for x in _edge_roots(lambda t: A * two_patch_g(t, y, ip), xs, grid[:, j]):
            pts.add((float(x), float(y)))
    boundary = np.array(sorted(pts), dtype=float).reshape(-1, 2)
    if len(boundary) > 1:
        a, b, _ = boundary_line(shared, ip)
        direction = np.array([-b, a])
        order = np.argsort(boundary @ direction, kind="stable")
        boundary = boundary[order]
        # drop near-duplicates produced where the line passes through a grid node
        keep = np.ones(len(boundary), dtype=bool)
        keep[1:] = np.any(np.abs(np.diff(boundary, axis=0)) > 1e-12, axis=1)
        boundary = boundary[keep]
    if len(boundary):
        vals = A * two_patch_g(boundary[:, 0], boundary[:, 1], ip)
        worst = float(np.max(np.abs(vals - 1.0)))
        if worst >= boundary_tol:
            raise NumericalFailure(f"boundary vertex misses the level set by {worst:.3e}")
    return RegionReport(A, r1, r2, feas, endemic, xs, ys, grid, boundary, boundary_tol)
