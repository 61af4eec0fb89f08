"""Aggregation of the fast movement process.

When movement is much faster than the disease, each compartment settles on
the stationary distribution of its movement matrix before the disease acts.
Summing the local dynamics over that distribution gives a four-dimensional
SEIRS system for the global totals, whose coefficients are weighted means of
the local parameters.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import (
    HypothesisViolation,
    NoConvergence,
    NumericalFailure,
    ParameterError,
    PartialResult,
    UnsupportedModelError,
)
from .metapop import COMPARTMENTS, GlobalState, aggregate, full_step, slow_map
from .seirs import Constant, Standard

__all__ = [
    "StationaryProfile",
    "ReducedParams",
    "stationary_distribution",
    "reduced_params",
    "reduced_step",
    "reduced_map",
    "r0_reduced",
    "dfe_reduced",
    "distribute",
    "lift_equilibrium",
    "FixedPoint",
    "find_fixed_point",
    "jacobian_fd",
    "hyperbolicity",
    "KDistance",
    "timescale_convergence",
]


# --------------------------------------------------------------------------
# stationary distributions
# --------------------------------------------------------------------------

STATIONARY_TOL = 1e-12
_STATIONARY_FAIL = 1e-10


def _stationary_solve(M):
    n = M.shape[0]
    A = M - np.eye(n)
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    return np.linalg.solve(A, rhs)


def _stationary_power(M, max_squarings=64):
    # repeated squaring: M^(2^j) -> m 1^T, so any column converges to m
    P = np.array(M, dtype=float)
    for _ in range(max_squarings):
        Q = P @ P
        Q /= Q.sum(axis=0)
        if np.max(np.abs(Q - P)) < 1e-15:
            P = Q
            break
        P = Q
    v = P.mean(axis=1)
    return v / v.sum()


def _residual(M, m):
    return float(np.max(np.abs(M @ m - m)))


def stationary_distribution(M):
    """Probability vector ``m`` with ``M m = m`` for a regular column-stochastic ``M``.

    The direct linear solve is the primary result; power iteration (by
    repeated squaring) is the cross-check and the fallback.

    Raises
    ------
    NumericalFailure
        if neither method reaches a residual of 1e-10, or the two disagree.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n == 1:
        return np.ones(1)
    try:
        m = _stationary_solve(M)
    except np.linalg.LinAlgError:
        m = None
    p = _stationary_power(M)
    candidates = [c for c in (m, p) if c is not None and np.all(np.isfinite(c))]
    if not candidates:
        raise NumericalFailure("stationary distribution: both methods failed")
    best = min(candidates, key=lambda c: _residual(M, c))
    if _residual(M, best) > _STATIONARY_FAIL:
        raise NumericalFailure(
            f"stationary distribution residual {_residual(M, best):.3e} exceeds {_STATIONARY_FAIL}"
        )
    if m is not None and np.max(np.abs(m - p)) > _STATIONARY_FAIL:
        raise NumericalFailure(
            f"linear solve and power iteration disagree by {np.max(np.abs(m - p)):.3e}"
        )
    if np.any(best <= 0):
        raise NumericalFailure("stationary distribution has non-positive entries; matrix not regular?")
    return best / best.sum()


@dataclass(frozen=True, eq=False)
class StationaryProfile:
    """Stationary patch distributions of the four compartments."""

    m_S: np.ndarray
    m_E: np.ndarray
    m_I: np.ndarray
    m_R: np.ndarray

    def __post_init__(self):
        lengths = set()
        for c in COMPARTMENTS:
            v = np.array(getattr(self, f"m_{c}"), dtype=float)
            if v.ndim != 1 or np.any(v <= 0) or abs(v.sum() - 1.0) > 1e-12:
                raise ParameterError(f"m_{c} must be a positive probability vector, got {v}")
            v.setflags(write=False)
            object.__setattr__(self, f"m_{c}", v)
            lengths.add(v.size)
        if len(lengths) != 1:
            raise ParameterError("stationary profiles must share one length")

    @classmethod
    def from_movement(cls, movement):
        return cls(*(stationary_distribution(M) for M in movement.matrices))

    @property
    def n(self):
        return self.m_S.size

    def as_matrix(self):
        """Rows are the compartment profiles, shape ``(4, n)``."""
        return np.vstack([self.m_S, self.m_E, self.m_I, self.m_R])


def distribute(profile, y):
    """Spread global totals over patches by the stationary profiles."""
    return profile.as_matrix() * np.asarray(y, dtype=float)[:, None]


# --------------------------------------------------------------------------
# reduced SEIRS system
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ReducedParams:
    """Coefficients of the aggregated SEIRS system.

    Each ``delta_X_Y`` is the weighted fraction of class ``X`` that ends the
    step in class ``Y``; the per-patch arrays feed the state-dependent
    transmission terms.
    """

    B_bar: float
    delta_S_S: float
    delta_R_S: float
    delta_E_E: float
    delta_E_I: float
    delta_I_I: float
    delta_I_R: float
    delta_R_R: float
    beta_I: float
    sigma_S: np.ndarray
    sigma_E: np.ndarray
    beta: np.ndarray
    profile: StationaryProfile

    def beta_S(self, y):
        return float(self.sigma_S @ self._transmission_weights(y))

    def beta_E(self, y):
        return float(self.sigma_E @ self._transmission_weights(y))

    @cached_property
    def _profile_T(self):
        return self.profile.as_matrix().T

    @cached_property
    def _num(self):
        return self.beta * self.profile.m_I * self.profile.m_S

    def _transmission_weights(self, y):
        # beta_j m_j^I m_j^S / N_j(effective); empty effective patches contribute 0
        denom = self._profile_T @ np.asarray(y, dtype=float)
        if np.all(denom > 0):
            return self._num / denom
        safe = np.where(denom > 0, denom, 1.0)
        return np.where(denom > 0, self._num / safe, 0.0)

    def coefficients(self):
        return {
            "B_bar": self.B_bar,
            "delta_S_S": self.delta_S_S,
            "delta_R_S": self.delta_R_S,
            "delta_E_E": self.delta_E_E,
            "delta_E_I": self.delta_E_I,
            "delta_I_I": self.delta_I_I,
            "delta_I_R": self.delta_I_R,
            "delta_R_R": self.delta_R_R,
            "beta_I": self.beta_I,
        }


def reduced_params(patches, profile):
    """Aggregated coefficients for standard incidence and constant recruitment.

    Raises :class:`UnsupportedModelError` for any other family; use
    :func:`reduced_map` for those.
    """
    patches = tuple(patches)
    if len(patches) != profile.n:
        raise ParameterError(f"{len(patches)} patches but profiles of length {profile.n}")
    for j, p in enumerate(patches):
        if not isinstance(p.transmission, Standard):
            raise UnsupportedModelError(
                f"patch {j}: aggregated coefficients need standard incidence, got {p.transmission.kind}"
            )
        if not isinstance(p.recruitment, Constant):
            raise UnsupportedModelError(
                f"patch {j}: aggregated coefficients need constant recruitment, got {p.recruitment.kind}"
            )

    def arr(attr):
        return np.array([getattr(p, attr) for p in patches])

    sS, sE, sI, sR = arr("sigma_S"), arr("sigma_E"), arr("sigma_I"), arr("sigma_R")
    gE, gI, gR = arr("gamma_E"), arr("gamma_I"), arr("gamma_R")
    beta = np.array([p.transmission.beta for p in patches])
    mS, mE, mI, mR = profile.m_S, profile.m_E, profile.m_I, profile.m_R

    def wsum(v):
        return math.fsum(v)

    return ReducedParams(
        B_bar=wsum(p.recruitment.B for p in patches),
        delta_S_S=wsum(sS * mS),
        delta_R_S=wsum(sS * gR * mR),
        delta_E_E=wsum(sE * (1 - gE) * mE),
        delta_E_I=wsum(sI * gE * mE),
        delta_I_I=wsum(sI * (1 - gI) * mI),
        delta_I_R=wsum(sR * gI * mI),
        delta_R_R=wsum(sR * (1 - gR) * mR),
        beta_I=wsum(sE * beta * mI),
        sigma_S=sS,
        sigma_E=sE,
        beta=beta,
        profile=profile,
    )


def reduced_step(rp, y):
    """One step of the aggregated SEIRS system for global totals ``y``."""
    S, E, I, R = y
    w = rp._transmission_weights(y)
    bS = float(rp.sigma_S @ w)
    bE = float(rp.sigma_E @ w)
    return GlobalState(
        rp.B_bar + rp.delta_R_S * R + rp.delta_S_S * S - bS * S * I,
        bE * S * I + rp.delta_E_E * E,
        rp.delta_E_I * E + rp.delta_I_I * I,
        rp.delta_I_R * I + rp.delta_R_R * R,
    )


def reduced_map(model, profile, y):
    """Aggregated step for any patch families: distribute, apply local dynamics, sum."""
    return aggregate(slow_map(model, distribute(profile, y)))


def r0_reduced(rp):
    return rp.delta_E_I * rp.beta_I / ((1.0 - rp.delta_E_E) * (1.0 - rp.delta_I_I))


def dfe_reduced(rp):
    return GlobalState(rp.B_bar / (1.0 - rp.delta_S_S), 0.0, 0.0, 0.0)


def lift_equilibrium(model, y_star, profile=None, tol=1e-10):
    """Full-model state approximated by a reduced equilibrium as ``k`` grows.

    Returns ``slow_map(distribute(y_star))``. ``y_star`` must be a fixed point
    of the reduced map to ``tol``.
    """
    if profile is None:
        profile = StationaryProfile.from_movement(model.movement)
    y_star = np.asarray(y_star, dtype=float)
    res = float(np.max(np.abs(np.asarray(reduced_map(model, profile, y_star)) - y_star)))
    if res >= tol * max(1.0, float(np.max(np.abs(y_star)))):
        raise ParameterError(f"y_star is not a fixed point of the reduced map (residual {res:.3e})")
    return slow_map(model, distribute(profile, y_star))


# --------------------------------------------------------------------------
# fixed points and hyperbolicity
# --------------------------------------------------------------------------


class FixedPoint(NamedTuple):
    x: np.ndarray
    residual: float
    method: str  # "iteration" or "newton"
    iterations: int


def _sup(v):
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def jacobian_fd(step, x, h=None):
    """Central-difference Jacobian of ``step`` at ``x`` (flattened coordinates)."""
    x = np.asarray(x, dtype=float)
    shape = x.shape
    flat = x.ravel()
    if h is None:
        h = 1e-6 * (1.0 + _sup(flat))
    J = np.empty((flat.size, flat.size))
    for i in range(flat.size):
        up = flat.copy()
        dn = flat.copy()
        up[i] += h
        dn[i] -= h
        fu = np.asarray(step(up.reshape(shape)), dtype=float).ravel()
        fd = np.asarray(step(dn.reshape(shape)), dtype=float).ravel()
        J[:, i] = (fu - fd) / (2.0 * h)
    return J


def hyperbolicity(step, x, gap=1e-6):
    """Eigenvalue moduli of the Jacobian at ``x`` and whether all are ``gap`` away from 1."""
    # central differences may step just outside the orthant; the maps extend smoothly there
    mods = np.abs(np.linalg.eigvals(jacobian_fd(step, x)))
    return mods, bool(np.all(np.abs(mods - 1.0) >= gap))


def find_fixed_point(step, seed, tol=1e-10, max_iter=10_000, newton_iter=50):
    """Locate ``x`` with ``||step(x) - x||_inf < tol``.

    Damped iteration ``x <- (1 - lam) x + lam step(x)`` starts at ``lam = 1``
    and halves ``lam`` (down to 1/64) whenever the residual grows for 20
    consecutive iterations. If that does not converge within ``max_iter``
    steps, Newton's method with a finite-difference Jacobian takes over from
    the best iterate found.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    as_arr = lambda v: np.asarray(v, dtype=float)  # noqa: E731
    x = as_arr(seed).copy()
    fx = as_arr(step(x))
    res = _sup(fx - x)
    best, best_res = x, res
    lam, rising = 1.0, 0
    it = 0
    while it < max_iter and res >= tol:
        x = (1.0 - lam) * x + lam * fx
        fx = as_arr(step(x))
        new_res = _sup(fx - x)
        it += 1
        rising = rising + 1 if new_res > res else 0
        res = new_res
        if res < best_res:
            best, best_res = x, res
        if not np.isfinite(res) or rising >= 20:
            if lam <= 1.0 / 64:
                break
            lam *= 0.5
            rising = 0
            x = best
            fx = as_arr(step(x))
            res = _sup(fx - x)
    if best_res < tol:
        return FixedPoint(best, best_res, "iteration", it)

    x = best
    shape = x.shape
    for j in range(1, newton_iter + 1):
        fx = as_arr(step(x))
        r = (fx - x).ravel()
        if _sup(r) < tol:
            return FixedPoint(x, _sup(r), "newton", it + j - 1)
        J = jacobian_fd(step, x) - np.eye(r.size)
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        x = x + dx.reshape(shape)
        if not np.all(np.isfinite(x)):
            break
    fx = as_arr(step(x))
    final = _sup(fx - x)
    if final < tol:
        return FixedPoint(x, final, "newton", it + newton_iter)
    raise NoConvergence(
        f"no fixed point to tolerance {tol} (best residual {min(best_res, final):.3e})",
        last=x,
        residual=min(best_res, final),
    )


# --------------------------------------------------------------------------
# time-scale convergence
# --------------------------------------------------------------------------


class KDistance(NamedTuple):
    k: int
    distance: float
    residual: float
    method: str


def timescale_convergence(model, y_star, ks, tol=1e-10, max_iter=10_000, workers=None, check=True):
    """Distance between the full-model equilibrium at each ``k`` and its reduced limit.

    For each ``k`` the equilibrium ``X_k`` of the full model is located by
    :func:`find_fixed_point` seeded at the lifted state ``X*``; the entry
    records ``||X_k - X*||_inf``. With ``check`` the reduced equilibrium is
    first tested for hyperbolicity.

    Raises
    ------
    HypothesisViolation
        if ``y_star`` is non-hyperbolic for the reduced map.
    PartialResult
        if some ``k`` fails; ``completed`` holds the successful entries.
    """
    ks = [int(k) for k in ks]
    if not ks or any(k < 1 for k in ks):
        raise ParameterError("ks must be a nonempty list of positive integers")
    profile = StationaryProfile.from_movement(model.movement)
    y_star = np.asarray(y_star, dtype=float)
    if check:
        mods, ok = hyperbolicity(lambda y: np.asarray(reduced_map(model, profile, y)), y_star)
        if not ok:
            raise HypothesisViolation(
                f"reduced equilibrium is non-hyperbolic (eigenvalue moduli {np.sort(mods)})"
            )
    X_star = lift_equilibrium(model, y_star, profile)

    def one(k):
        mk = model.with_k(k)
        fp = find_fixed_point(lambda x: full_step(mk, x), X_star, tol=tol, max_iter=max_iter)
        return KDistance(k, _sup(fp.x - X_star), fp.residual, fp.method)

    results, failures = {}, {}

    def guarded(k):
        try:
            results[k] = one(k)
        except NoConvergence as exc:
            failures[k] = exc

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(guarded, ks))
    else:
        for k in ks:
            guarded(k)
    if failures:
        done = [results[k] for k in ks if k in results]
        bad = ", ".join(f"k={k}: {exc}" for k, exc in sorted(failures.items()))
        raise PartialResult(f"fixed point not found for {bad}", done)
    return [results[k] for k in ks]
