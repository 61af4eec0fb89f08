"""n-patch metapopulation with fast movement and slow local disease dynamics.

A metapopulation state is a ``(4, n)`` float array in compartment-major
layout: row 0 holds the susceptible densities of patches ``0..n-1``, then
rows for E, I and R. Movement matrices are column-stochastic: entry
``M[i, j]`` is the fraction of individuals in patch ``j`` that move to
patch ``i`` during one movement event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ParameterError, UnsupportedModelError
from .seirs import EpidemicParams, LocalState, seirs_step

__all__ = [
    "COMPARTMENTS",
    "GlobalState",
    "MovementModel",
    "MetapopModel",
    "metapop_state",
    "check_state",
    "is_regular",
    "aggregate",
    "fast_step",
    "fast_iterate",
    "slow_map",
    "full_step",
    "simulate",
    "dissipativity_bound",
]

COMPARTMENTS = ("S", "E", "I", "R")

#: Global totals share the single-patch layout.
GlobalState = LocalState

COLUMN_SUM_TOL = 1e-12
STRUCTURAL_ZERO = 1e-15
# above this k the movement matrices are powered by binary exponentiation
_DIRECT_K_MAX = 8


def check_state(x, n=None):
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != 4 or x.shape[1] < 1:
        raise ParameterError(f"metapopulation state must have shape (4, n), got {x.shape}")
    if n is not None and x.shape[1] != n:
        raise ParameterError(f"state has {x.shape[1]} patches, model has {n}")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ParameterError("metapopulation state must be finite and componentwise >= 0")
    return x


def metapop_state(S, E, I, R):
    """Stack per-compartment patch vectors into a validated ``(4, n)`` array."""
    blocks = [np.atleast_1d(np.asarray(b, dtype=float)) for b in (S, E, I, R)]
    if len({b.shape for b in blocks}) != 1 or blocks[0].ndim != 1:
        raise ParameterError("all four compartment blocks must be 1-D with the same length")
    return check_state(np.vstack(blocks))


def is_regular(M):
    """True if some power of ``M`` up to the Wielandt bound is entrywise positive."""
    n = M.shape[0]
    pattern = (M > STRUCTURAL_ZERO).astype(np.int64)
    power = pattern.copy()
    for _ in range(n * n - 2 * n + 2):
        if power.all():
            return True
        power = np.minimum(power @ pattern, 1)
    return bool(power.all())


def _check_movement_matrix(name, M):
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParameterError(f"movement matrix {name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)) or np.any(M < 0):
        raise ParameterError(f"movement matrix {name} must have finite nonnegative entries")
    sums = M.sum(axis=0)
    for j, s in enumerate(sums):
        if abs(s - 1.0) > COLUMN_SUM_TOL:
            raise ParameterError(
                f"movement matrix {name}: column {j} sums to {s!r}, expected 1 "
                f"(column-stochastic convention, tolerance {COLUMN_SUM_TOL})"
            )
    if not is_regular(M):
        raise ParameterError(f"movement matrix {name} is not regular (no positive power)")
    M.setflags(write=False)
    return M


@dataclass(frozen=True, eq=False)
class MovementModel:
    """Constant column-stochastic movement matrices and the time-scale ratio ``k``."""

    M_S: np.ndarray
    M_E: np.ndarray
    M_I: np.ndarray
    M_R: np.ndarray
    k: int = 1

    def __post_init__(self):
        for c in COMPARTMENTS:
            object.__setattr__(self, f"M_{c}", _check_movement_matrix(f"M_{c}", getattr(self, f"M_{c}")))
        shapes = {getattr(self, f"M_{c}").shape for c in COMPARTMENTS}
        if len(shapes) != 1:
            raise ParameterError(f"movement matrices disagree in size: {sorted(shapes)}")
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ParameterError(f"time-scale ratio k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))

    @classmethod
    def uniform(cls, M, k=1):
        """Same matrix for every compartment."""
        return cls(M, M, M, M, k)

    @classmethod
    def identity(cls, n=1, k=1):
        eye = np.eye(n)
        return cls(eye, eye, eye, eye, k)

    @property
    def n(self):
        return self.M_S.shape[0]

    @property
    def matrices(self):
        return (self.M_S, self.M_E, self.M_I, self.M_R)

    def matrices_at(self, y):
        """Movement matrices for global state ``y``.

        Density-dependent movement would hook in here; constant matrices
        ignore ``y``.
        """
        return self.matrices

    def with_k(self, k):
        return replace(self, k=k)

    def __eq__(self, other):
        if not isinstance(other, MovementModel):
            return NotImplemented
        return self.k == other.k and all(
            np.array_equal(a, b) for a, b in zip(self.matrices, other.matrices)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MetapopModel:
    patches: Sequence[EpidemicParams]
    movement: MovementModel

    def __post_init__(self):
        object.__setattr__(self, "patches", tuple(self.patches))
        if len(self.patches) != self.movement.n:
            raise ParameterError(
                f"{len(self.patches)} patch parameter sets for {self.movement.n}x{self.movement.n} movement"
            )

    @property
    def n(self):
        return len(self.patches)

    @cached_property
    def _powered(self):
        return _matrix_powers(self.movement.matrices, self.movement.k)

    def with_k(self, k):
        return MetapopModel(self.patches, self.movement.with_k(k))

    def __eq__(self, other):
        if not isinstance(other, MetapopModel):
            return NotImplemented
        return self.patches == other.patches and self.movement == other.movement

    __hash__ = None


def aggregate(x):
    """Global totals ``(S, E, I, R)`` of a metapopulation state."""
    x = np.asarray(x, dtype=float)
    return GlobalState(*(float(v) for v in x.sum(axis=1)))


def _apply(mats, x):
    return np.vstack([M @ row for M, row in zip(mats, x)])


def fast_step(m, x):
    """One movement event: each compartment block times its matrix."""
    x = np.asarray(x, dtype=float)
    if x.shape != (4, m.n):
        raise ParameterError(f"state shape {x.shape} does not match {m.n} patches")
    return _apply(m.matrices_at(aggregate(x)), x)


def _matrix_powers(mats, k):
    return tuple(np.linalg.matrix_power(M, k) for M in mats)


def fast_iterate(m, x, k=None):
    """``k`` movement events (default ``m.k``).

    Small ``k`` steps directly; larger ``k`` uses binary exponentiation of
    the matrices. The block totals are invariant, so the matrices are
    evaluated once.
    """
    k = m.k if k is None else k
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k!r}")
    x = np.asarray(x, dtype=float)
    if x.shape != (4, m.n):
        raise ParameterError(f"state shape {x.shape} does not match {m.n} patches")
    mats = m.matrices_at(aggregate(x))
    if k <= _DIRECT_K_MAX:
        for _ in range(k):
            x = _apply(mats, x)
        return x
    return _apply(_matrix_powers(mats, k), x)


def slow_map(model, x):
    """Local SEIRS step in every patch with that patch's parameters."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for j, p in enumerate(model.patches):
        out[:, j] = seirs_step(p, x[:, j])
    return out


def full_step(model, x):
    """``k`` movement events followed by one disease step."""
    x = np.asarray(x, dtype=float)
    if x.shape != (4, model.n):
        raise ParameterError(f"state shape {x.shape} does not match {model.n} patches")
    if model.movement.k <= _DIRECT_K_MAX:
        moved = fast_iterate(model.movement, x)
    else:
        moved = _apply(model._powered, x)
    return slow_map(model, moved)


def simulate(model, x0, horizon):
    """Orbit of :func:`full_step`, shape ``(horizon + 1, 4, n)`` including ``x0``."""
    if horizon < 0:
        raise ParameterError(f"horizon must be >= 0, got {horizon}")
    x = check_state(x0, model.n)
    traj = np.empty((horizon + 1,) + x.shape)
    traj[0] = x
    for t in range(horizon):
        x = full_step(model, x)
        traj[t + 1] = x
    return traj


def dissipativity_bound(model):
    """``(sigma_hat, B_hat, B_hat / (1 - sigma_hat))`` for bounded recruitment.

    Every orbit satisfies ``N(t) <= max(N(0), B_hat / (1 - sigma_hat))``.
    """
    for j, p in enumerate(model.patches):
        if not p.recruitment.bounded:
            raise UnsupportedModelError(
                f"patch {j}: {p.recruitment.kind} recruitment is unbounded, no dissipativity bound"
            )
    sigma_hat = max(max(p.sigmas) for p in model.patches)
    B_hat = math.fsum(p.recruitment.upper_bound() for p in model.patches)
    return sigma_hat, B_hat, B_hat / (1.0 - sigma_hat)
