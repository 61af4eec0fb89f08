"""Single-patch discrete-time SEIRS model.

One time step is the composition of two maps: epidemiological transitions
(``disease_map``) followed by survival and recruitment (``demography_map``).
States are :class:`LocalState` tuples ``(S, E, I, R)`` of densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from scipy.optimize import brentq

from ._linalg import inv2x2, spectral_radius_2x2
from .errors import HypothesisViolation, ParameterError, UnsupportedModelError

__all__ = [
    "Standard",
    "Poisson",
    "Constant",
    "BevertonHolt",
    "Ricker",
    "Geometric",
    "EpidemicParams",
    "LocalState",
    "eval_transmission",
    "eval_recruitment",
    "disease_map",
    "demography_map",
    "seirs_step",
    "demographic_equilibrium",
    "dfe_local",
    "r0_local_closed",
    "r0_next_generation",
    "next_generation_matrix",
    "linear_recurrence_solution",
]


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be a positive finite number, got {value!r}")


# --------------------------------------------------------------------------
# transmission functions Phi: [0, 1] -> [0, 1]
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Standard:
    """Proportional (standard) incidence, ``Phi(x) = beta * x``."""

    beta: float
    kind = "standard"
    concave = True

    def __post_init__(self):
        _positive("beta", self.beta)
        if self.beta > 1:
            raise ParameterError(f"standard incidence needs beta in (0, 1], got {self.beta}")

    def __call__(self, x):
        return self.beta * x

    def derivative_at_zero(self):
        return self.beta


@dataclass(frozen=True)
class Poisson:
    """Poisson-process infections, ``Phi(x) = 1 - exp(-beta * x)``."""

    beta: float
    kind = "poisson"
    concave = True

    def __post_init__(self):
        _positive("beta", self.beta)

    def __call__(self, x):
        return -math.expm1(-self.beta * x)

    def derivative_at_zero(self):
        return self.beta


TransmissionSpec = Union[Standard, Poisson]


# --------------------------------------------------------------------------
# recruitment functions B: [0, inf) -> [0, inf)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    B: float
    kind = "constant"
    bounded = True

    def __post_init__(self):
        _positive("B", self.B)

    def __call__(self, N):
        return self.B

    def derivative(self, N):
        return 0.0

    def upper_bound(self):
        return self.B


@dataclass(frozen=True)
class BevertonHolt:
    """``B(N) = r N / (1 + N / K)``, bounded above by ``r K``."""

    r: float
    K: float
    kind = "beverton_holt"
    bounded = True

    def __post_init__(self):
        _positive("r", self.r)
        _positive("K", self.K)

    def __call__(self, N):
        return self.r * N / (1.0 + N / self.K)

    def derivative(self, N):
        return self.r / (1.0 + N / self.K) ** 2

    def upper_bound(self):
        return self.r * self.K


@dataclass(frozen=True)
class Ricker:
    """``B(N) = r N exp(-N / K)``, maximal at ``N = K``."""

    r: float
    K: float
    kind = "ricker"
    bounded = True

    def __post_init__(self):
        _positive("r", self.r)
        _positive("K", self.K)

    def __call__(self, N):
        return self.r * N * math.exp(-N / self.K)

    def derivative(self, N):
        return self.r * math.exp(-N / self.K) * (1.0 - N / self.K)

    def upper_bound(self):
        return self.r * self.K / math.e


@dataclass(frozen=True)
class Geometric:
    r: float
    kind = "geometric"
    bounded = False

    def __post_init__(self):
        _positive("r", self.r)

    def __call__(self, N):
        return self.r * N

    def derivative(self, N):
        return self.r

    def upper_bound(self):
        return math.inf


RecruitmentSpec = Union[Constant, BevertonHolt, Ricker, Geometric]


# --------------------------------------------------------------------------
# parameters and state
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EpidemicParams:
    """Per-patch disease and demography parameters.

    ``sigma_*`` are per-step survival fractions, ``gamma_*`` per-step
    class-transition fractions (E->I, I->R, R->S). All lie strictly in (0, 1).
    """

    sigma_S: float
    sigma_E: float
    sigma_I: float
    sigma_R: float
    gamma_E: float
    gamma_I: float
    gamma_R: float
    transmission: TransmissionSpec
    recruitment: RecruitmentSpec

    def __post_init__(self):
        for name in ("sigma_S", "sigma_E", "sigma_I", "sigma_R", "gamma_E", "gamma_I", "gamma_R"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0.0 < v < 1.0):
                raise ParameterError(f"{name} must lie in the open interval (0, 1), got {v!r}")
        if not isinstance(self.transmission, (Standard, Poisson)):
            raise ParameterError(f"unknown transmission spec {self.transmission!r}")
        if not isinstance(self.recruitment, (Constant, BevertonHolt, Ricker, Geometric)):
            raise ParameterError(f"unknown recruitment spec {self.recruitment!r}")

    @property
    def sigmas(self):
        return (self.sigma_S, self.sigma_E, self.sigma_I, self.sigma_R)


class LocalState(NamedTuple):
    """Compartment densities of one patch (or global totals)."""

    S: float
    E: float
    I: float
    R: float

    @property
    def N(self):
        return self.S + self.E + self.I + self.R

    @classmethod
    def checked(cls, S, E, I, R):
        x = cls(float(S), float(E), float(I), float(R))
        for name, v in zip(cls._fields, x):
            if not (v >= 0.0 and math.isfinite(v)):
                raise ParameterError(f"compartment {name} must be finite and >= 0, got {v!r}")
        return x


# --------------------------------------------------------------------------
# maps
# --------------------------------------------------------------------------


def eval_transmission(spec, x):
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"transmission argument must lie in [0, 1], got {x!r}")
    if x == 0.0:
        return 0.0
    return spec(x)


def eval_recruitment(spec, N):
    if N < 0:
        raise ParameterError(f"total population must be >= 0, got {N!r}")
    return spec(N)


def _incidence(p, S, I, N):
    # removable singularity at N = 0: S = 0 there, so no new infections
    if N <= 0.0:
        return 0.0
    return p.transmission(min(I / N, 1.0)) * S


def disease_map(p, x):
    """Epidemiological transitions; total population is preserved."""
    S, E, I, R = x
    N = S + E + I + R
    new_inf = _incidence(p, S, I, N)
    return LocalState(
        S - new_inf + p.gamma_R * R,
        E + new_inf - p.gamma_E * E,
        I + p.gamma_E * E - p.gamma_I * I,
        R + p.gamma_I * I - p.gamma_R * R,
    )


def demography_map(p, x):
    """Survival in every class plus recruitment into S."""
    S, E, I, R = x
    N = S + E + I + R
    return LocalState(
        p.recruitment(N) + p.sigma_S * S,
        p.sigma_E * E,
        p.sigma_I * I,
        p.sigma_R * R,
    )


def seirs_step(p, x):
    """One step of the SEIRS model: transitions, then demography."""
    return demography_map(p, disease_map(p, x))


# --------------------------------------------------------------------------
# disease-free equilibrium
# --------------------------------------------------------------------------

_HYPERBOLIC_GAP = 1e-8


class DemographicEquilibrium(NamedTuple):
    S_star: float
    multiplier: float  # sigma_S + B'(S*)
    attracting: bool


def demographic_equilibrium(recruitment, sigma_S):
    """Positive fixed point of ``S -> sigma_S * S + B(S)``.

    Constant recruitment uses the closed form; other bounded families are
    solved by bracketing on ``(0, 2 * Bmax / (1 - sigma_S)]``. Uniqueness and
    hyperbolicity of the root are checked, not assumed.

    Raises
    ------
    UnsupportedModelError
        for unbounded (geometric) recruitment.
    HypothesisViolation
        if there is no positive root, several roots, or the root is
        non-hyperbolic.
    """
    if isinstance(recruitment, Constant):
        S_star = recruitment.B / (1.0 - sigma_S)
        return DemographicEquilibrium(S_star, sigma_S, True)
    if not recruitment.bounded:
        raise UnsupportedModelError(
            f"{recruitment.kind} recruitment is unbounded; the demographic equilibrium "
            "is only computed for constant or bounded recruitment"
        )

    def h(S):
        return (1.0 - sigma_S) * S - recruitment(S)

    s_max = 2.0 * recruitment.upper_bound() / (1.0 - sigma_S)
    # scan for sign changes; the grid is log-spaced to resolve roots near 0
    grid = np.geomspace(s_max * 1e-9, s_max, 4000)
    vals = np.array([h(s) for s in grid])
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0.0:
            roots.append(brentq(h, a, b, xtol=1e-12, rtol=4 * np.finfo(float).eps))
    if not roots:
        raise HypothesisViolation(
            f"no positive demographic equilibrium for {recruitment!r} with sigma_S={sigma_S}"
        )
    if len(roots) > 1:
        raise HypothesisViolation(f"demographic equilibrium is not unique: roots {roots}")
    S_star = roots[0]
    mult = sigma_S + recruitment.derivative(S_star)
    if abs(abs(mult) - 1.0) < _HYPERBOLIC_GAP:
        raise HypothesisViolation(
            f"demographic equilibrium S*={S_star} is non-hyperbolic (multiplier {mult})"
        )
    return DemographicEquilibrium(S_star, mult, abs(mult) < 1.0)


def dfe_local(p):
    """Disease-free equilibrium ``(S*, 0, 0, 0)``.

    Raises :class:`HypothesisViolation` when ``S*`` is not an attracting
    hyperbolic equilibrium of the disease-free demography.
    """
    eq = demographic_equilibrium(p.recruitment, p.sigma_S)
    if not eq.attracting:
        raise HypothesisViolation(
            f"demographic equilibrium S*={eq.S_star} is repelling (multiplier {eq.multiplier})"
        )
    return LocalState(eq.S_star, 0.0, 0.0, 0.0)


# --------------------------------------------------------------------------
# basic reproduction number
# --------------------------------------------------------------------------


def r0_local_closed(p):
    num = p.sigma_E * p.sigma_I * p.gamma_E * p.transmission.derivative_at_zero()
    den = (1.0 - p.sigma_E * (1.0 - p.gamma_E)) * (1.0 - p.sigma_I * (1.0 - p.gamma_I))
    return num / den


def next_generation_matrix(p):
    """Return ``(F, T)``: new-infection and transition Jacobians at the DFE, infected order (E, I)."""
    F = np.array([[0.0, p.sigma_E * p.transmission.derivative_at_zero()], [0.0, 0.0]])
    T = np.array(
        [
            [p.sigma_E * (1.0 - p.gamma_E), 0.0],
            [p.sigma_I * p.gamma_E, p.sigma_I * (1.0 - p.gamma_I)],
        ]
    )
    return F, T


def r0_next_generation(p):
    """Spectral radius of ``F (Id - T)^-1``."""
    F, T = next_generation_matrix(p)
    Q = F @ inv2x2(np.eye(2) - T)
    return spectral_radius_2x2(Q)


def linear_recurrence_solution(a, b, x0, t):
    """Closed-form solution of ``x(t+1) = a x(t) + b`` with ``0 < a < 1``."""
    if not 0.0 < a < 1.0:
        raise ParameterError(f"a must lie in (0, 1), got {a!r}")
    if b < 0 or x0 < 0 or t < 0:
        raise ParameterError("b, x0 and t must be nonnegative")
    fixed = b / (1.0 - a)
    return (x0 - fixed) * a**t + fixed
