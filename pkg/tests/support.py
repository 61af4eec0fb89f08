"""Shared fixtures data and random generators for the test suite."""

import numpy as np

from episcale import (
    Constant,
    EpidemicParams,
    MetapopModel,
    MovementModel,
    Standard,
)

# flagship two-patch parameters
SIGMA_E, GAMMA_E, BETA = 0.99, 0.9, 0.95
PATCH1_I = (0.9, 0.5)
PATCH2_I = (0.95, 0.86)
M_E = [[0.999, 0.099], [0.001, 0.901]]
M_I = [[0.901, 0.001], [0.099, 0.999]]
M_S = [[0.8, 0.1], [0.2, 0.9]]
M_R = [[0.7, 0.3], [0.3, 0.7]]


def flagship_patch(sigma_I, gamma_I, B=10.0, sigma_S=0.95, sigma_R=0.95, gamma_R=0.1):
    return EpidemicParams(
        sigma_S=sigma_S,
        sigma_E=SIGMA_E,
        sigma_I=sigma_I,
        sigma_R=sigma_R,
        gamma_E=GAMMA_E,
        gamma_I=gamma_I,
        gamma_R=gamma_R,
        transmission=Standard(BETA),
        recruitment=Constant(B),
    )


def flagship_model(k=64):
    patches = [flagship_patch(*PATCH1_I), flagship_patch(*PATCH2_I)]
    return MetapopModel(patches, MovementModel(M_S, M_E, M_I, M_R, k))


def example_params(**over):
    """The worked single-patch example used throughout the operation tests."""
    kw = dict(
        sigma_S=0.9,
        sigma_E=0.9,
        sigma_I=0.8,
        sigma_R=0.95,
        gamma_E=0.5,
        gamma_I=0.25,
        gamma_R=0.1,
        transmission=Standard(0.5),
        recruitment=Constant(10.0),
    )
    kw.update(over)
    return EpidemicParams(**kw)


def random_params(rng, sigma=(0.5, 0.99), gamma=(0.05, 0.95), beta=(0.05, 1.0), B=(1.0, 20.0)):
    s = rng.uniform(*sigma, size=4)
    g = rng.uniform(*gamma, size=3)
    return EpidemicParams(
        sigma_S=s[0],
        sigma_E=s[1],
        sigma_I=s[2],
        sigma_R=s[3],
        gamma_E=g[0],
        gamma_I=g[1],
        gamma_R=g[2],
        transmission=Standard(rng.uniform(*beta)),
        recruitment=Constant(rng.uniform(*B)),
    )


def random_stochastic(rng, n, sparsity=0.0):
    """Random regular column-stochastic matrix.

    With ``sparsity`` > 0 entries are zeroed at random, but the diagonal and a
    cyclic permutation are kept positive so the matrix stays primitive.
    """
    M = rng.dirichlet(np.ones(n), size=n).T
    if sparsity and n > 1:
        mask = rng.random((n, n)) < sparsity
        keep = np.eye(n, dtype=bool) | np.roll(np.eye(n, dtype=bool), 1, axis=0)
        M = np.where(mask & ~keep, 0.0, M + keep * 0.05)
        M /= M.sum(axis=0)
    return M


def random_model(rng, n, k=None, **param_kw):
    mats = [random_stochastic(rng, n, sparsity=rng.choice([0.0, 0.5])) for _ in range(4)]
    k = int(rng.integers(1, 20)) if k is None else k
    return MetapopModel([random_params(rng, **param_kw) for _ in range(n)], MovementModel(*mats, k))


def random_state(rng, n, scale=100.0):
    return rng.uniform(0.0, scale, size=(4, n))
