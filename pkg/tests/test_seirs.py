import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from episcale import (
    BevertonHolt,
    Constant,
    EpidemicParams,
    Geometric,
    HypothesisViolation,
    LocalState,
    ParameterError,
    Poisson,
    Ricker,
    Standard,
    UnsupportedModelError,
    demography_map,
    dfe_local,
    disease_map,
    eval_recruitment,
    eval_transmission,
    linear_recurrence_solution,
    r0_local_closed,
    r0_next_generation,
    seirs_step,
)
from episcale.seirs import demographic_equilibrium

from support import example_params, random_params

open_unit = st.floats(0.01, 0.99)
density = st.floats(0.0, 1e4, allow_nan=False)


@st.composite
def params(draw, poisson=None):
    if poisson is None:
        poisson = draw(st.booleans())
    beta = draw(st.floats(0.01, 1.0))
    trans = Poisson(beta * 3) if poisson else Standard(beta)
    rec = draw(
        st.sampled_from(["constant", "bh", "ricker"]).map(
            lambda kind: {
                "constant": Constant(5.0),
                "bh": BevertonHolt(1.5, 50.0),
                "ricker": Ricker(2.0, 40.0),
            }[kind]
        )
    )
    return EpidemicParams(*(draw(open_unit) for _ in range(7)), transmission=trans, recruitment=rec)


states = st.tuples(density, density, density, density).map(lambda t: LocalState(*t))


# -- transmission / recruitment ------------------------------------------------


def test_standard_transmission_values():
    assert eval_transmission(Standard(0.5), 0.0) == 0.0
    assert eval_transmission(Standard(0.5), 0.03) == pytest.approx(0.015, abs=1e-15)


def test_poisson_transmission_against_high_precision():
    # 1 - e^-1 to 50 digits (mpmath)
    assert eval_transmission(Poisson(1.0), 1.0) == pytest.approx(0.63212055882855767840, abs=1e-15)


@pytest.mark.parametrize("x", [-0.1, 1.0000001])
def test_transmission_domain(x):
    with pytest.raises(ParameterError):
        eval_transmission(Standard(0.5), x)


def test_transmission_parameter_domain():
    Standard(1.0)  # beta = 1 allowed
    with pytest.raises(ParameterError):
        Standard(1.01)
    with pytest.raises(ParameterError):
        Standard(0.0)
    Poisson(3.0)


@pytest.mark.parametrize("spec", [Standard(0.7), Poisson(2.5)])
def test_transmission_shape(spec):
    xs = np.linspace(0, 1, 101)
    vals = np.array([eval_transmission(spec, x) for x in xs])
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) > 0)
    assert np.all((vals >= 0) & (vals <= 1))
    assert np.all(np.diff(vals, 2) <= 1e-15)  # concave
    h = 1e-7
    assert (spec(h) - spec(0)) / h == pytest.approx(spec.derivative_at_zero(), rel=1e-6)
    assert spec.concave


def test_recruitment_values():
    assert eval_recruitment(Constant(10), 12345) == 10
    assert eval_recruitment(Geometric(0.2), 50) == pytest.approx(10)
    assert eval_recruitment(BevertonHolt(2, 100), 100) == pytest.approx(100)
    assert eval_recruitment(Ricker(2, 100), 100) == pytest.approx(200 / math.e)
    with pytest.raises(ParameterError):
        eval_recruitment(Constant(1), -1)


def test_recruitment_boundedness_flags():
    assert Constant(1).bounded and BevertonHolt(1, 1).bounded and Ricker(1, 1).bounded
    assert not Geometric(1).bounded
    grid = np.linspace(0, 1e4, 20001)
    for spec in (BevertonHolt(2, 100), Ricker(3, 50)):
        assert max(spec(N) for N in grid) <= spec.upper_bound() + 1e-12


@pytest.mark.parametrize("spec", [BevertonHolt(2, 100), Ricker(3, 50), Geometric(0.4)])
def test_recruitment_derivatives(spec):
    for N in (0.0, 10.0, 80.0, 300.0):
        h = 1e-5
        fd = (spec(N + h) - spec(max(N - h, 0.0))) / (h + min(h, N))
        assert spec.derivative(N) == pytest.approx(fd, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize(
    "field,value", [("sigma_S", 0.0), ("sigma_E", 1.0), ("gamma_E", 0.0), ("gamma_R", 1.0), ("sigma_I", 1.5)]
)
def test_params_reject_boundary_values(field, value):
    with pytest.raises(ParameterError):
        example_params(**{field: value})


# -- maps ----------------------------------------------------------------------


def test_disease_map_empty_population():
    assert disease_map(example_params(), (0, 0, 0, 0)) == (0, 0, 0, 0)


def test_disease_map_worked_example():
    # scalar evaluation: Phi(3/100) = 0.015, new infections 1.35
    out = disease_map(example_params(), LocalState(90, 5, 3, 2))
    assert out == pytest.approx((90 - 1.35 + 0.2, 5 + 1.35 - 2.5, 3 + 2.5 - 0.75, 2 + 0.75 - 0.2), abs=1e-12)
    assert out == pytest.approx((88.85, 3.85, 4.75, 2.55), abs=1e-12)


def test_disease_map_preserves_mass_random():
    rng = np.random.default_rng(1)
    for _ in range(100):
        p = random_params(rng)
        x = LocalState(*rng.uniform(0, 100, 4))
        assert sum(disease_map(p, x)) == pytest.approx(sum(x), rel=1e-12)


def test_demography_map_examples():
    p = example_params()
    assert demography_map(p, (100, 0, 0, 0)) == pytest.approx((100, 0, 0, 0))
    assert demography_map(example_params(recruitment=Constant(1)), (0, 10, 0, 0)) == pytest.approx((1, 9, 0, 0))
    # B + sigma_S S = 10 + 0.9 * 90 = 91
    assert demography_map(p, (90, 5, 3, 2)) == pytest.approx((91, 4.5, 2.4, 1.9), abs=1e-12)


def test_seirs_step_worked_example():
    # each line of the detailed step by hand:
    # S' = 10 + 0.9*0.1*2 + 0.9*(1 - 0.015)*90, E' = 0.9*1.35 + 0.9*0.5*5,
    # I' = 0.8*0.5*5 + 0.8*0.75*3, R' = 0.95*0.25*3 + 0.95*0.9*2
    out = seirs_step(example_params(), LocalState(90, 5, 3, 2))
    expected = (
        10 + 0.9 * 0.1 * 2 + 0.9 * 0.985 * 90,
        0.9 * 1.35 + 0.9 * 0.5 * 5,
        0.8 * 0.5 * 5 + 0.8 * 0.75 * 3,
        0.95 * 0.25 * 3 + 0.95 * 0.9 * 2,
    )
    assert out == pytest.approx(expected, abs=1e-12)
    assert out == pytest.approx((89.965, 3.465, 3.8, 2.4225), abs=1e-12)


def test_seirs_step_dfe_is_fixed():
    assert seirs_step(example_params(), (100, 0, 0, 0)) == pytest.approx((100, 0, 0, 0), abs=1e-12)


def test_infection_free_set_is_invariant():
    p = example_params(recruitment=BevertonHolt(2, 100), sigma_S=0.5)
    x = LocalState(37.0, 0, 0, 0)
    for _ in range(50):
        nxt = seirs_step(p, x)
        assert nxt.E == nxt.I == nxt.R == 0.0
        assert nxt.S == pytest.approx(p.recruitment(x.S) + p.sigma_S * x.S)
        x = nxt


@settings(max_examples=300, deadline=None)
@given(params(), states)
def test_positivity(p, x):
    out = seirs_step(p, x)
    assert all(v >= 0 for v in out)


@settings(max_examples=300, deadline=None)
@given(params(), states)
def test_mass_preservation(p, x):
    out = disease_map(p, x)
    assert sum(out) == pytest.approx(sum(x), rel=1e-12, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(params(), states, st.integers(1, 300))
def test_dissipativity_envelope(p, x, steps):
    B_hat = p.recruitment.upper_bound()
    s_hat = max(p.sigmas)
    N0 = x.N
    bound = max(N0, B_hat / (1 - s_hat))
    for t in range(1, steps + 1):
        x = seirs_step(p, x)
        assert x.N <= bound + 1e-9 * max(1.0, bound)
        # the linear recurrence with a = sigma_hat, b = B_hat dominates N(t)
        assert x.N <= linear_recurrence_solution(s_hat, B_hat, N0, t) + 1e-9 * max(1.0, bound)


def test_lower_envelope_constant_recruitment():
    rng = np.random.default_rng(7)
    for _ in range(20):
        p = random_params(rng)
        x = LocalState(*rng.uniform(0, 500, 4))
        s_min = min(p.sigmas)
        floor = min(x.N, p.recruitment.B / (1 - s_min))
        for _ in range(500):
            x = seirs_step(p, x)
            assert x.N >= floor - 1e-9


# -- equilibria ------------------------------------------------------------------


def test_dfe_constant_closed_form():
    assert dfe_local(example_params()) == pytest.approx((100, 0, 0, 0))
    assert dfe_local(example_params(recruitment=Constant(15), sigma_S=0.8)) == pytest.approx((75, 0, 0, 0))


def test_dfe_beverton_holt():
    # 0.5 = 2 / (1 + S/100)  =>  S* = 300
    x = dfe_local(example_params(recruitment=BevertonHolt(2, 100), sigma_S=0.5))
    assert x.S == pytest.approx(300, abs=1e-9)
    assert x[1:] == (0, 0, 0)


def test_dfe_ricker_closed_form():
    # r e^{-S/K} = 1 - sigma_S  =>  S* = K ln(r / (1 - sigma_S))
    p = example_params(recruitment=Ricker(1.2, 100), sigma_S=0.5)
    assert dfe_local(p).S == pytest.approx(100 * math.log(1.2 / 0.5), abs=1e-9)


def test_dfe_no_positive_root():
    # r < 1 - sigma_S: population collapses, no positive equilibrium
    with pytest.raises(HypothesisViolation):
        dfe_local(example_params(recruitment=BevertonHolt(0.05, 100), sigma_S=0.5))


def test_dfe_repelling_ricker():
    # strong overcompensation: multiplier sigma + (1 - sigma)(1 - ln(r/(1-sigma))) < -1
    p = example_params(recruitment=Ricker(60.0, 100), sigma_S=0.1)
    eq = demographic_equilibrium(p.recruitment, p.sigma_S)
    assert not eq.attracting
    with pytest.raises(HypothesisViolation):
        dfe_local(p)


def test_dfe_geometric_unsupported():
    with pytest.raises(UnsupportedModelError):
        dfe_local(example_params(recruitment=Geometric(0.1)))


def test_infection_free_orbit_converges_to_dfe():
    p = example_params()
    x = LocalState(3.0, 0, 0, 40.0)
    for _ in range(10_000):
        x = seirs_step(p, x)
    assert abs(x.S - dfe_local(p).S) < 1e-8


# -- reproduction numbers -------------------------------------------------------


def test_r0_examples():
    p = example_params(transmission=Standard(0.6))
    assert r0_local_closed(p) == pytest.approx(0.216 / (0.55 * 0.4), abs=1e-12)
    assert r0_next_generation(p) == pytest.approx(0.981818181818, abs=1e-10)
    flag = example_params(sigma_E=0.99, gamma_E=0.9, transmission=Standard(0.95), sigma_I=0.9, gamma_I=0.5)
    assert r0_local_closed(flag) == pytest.approx(1.537291, abs=1e-6)
    assert abs(r0_next_generation(flag) - r0_local_closed(flag)) < 1e-10


def test_r0_vanishing_transmission():
    p = example_params(transmission=Standard(1e-12))
    assert r0_local_closed(p) < 1e-10
    assert r0_next_generation(p) < 1e-10


@settings(max_examples=200, deadline=None)
@given(params())
def test_r0_routes_agree(p):
    assert abs(r0_local_closed(p) - r0_next_generation(p)) < 1e-10


def test_r0_poisson_uses_derivative_at_zero():
    p = example_params(transmission=Poisson(0.6))
    assert r0_local_closed(p) == pytest.approx(r0_local_closed(example_params(transmission=Standard(0.6))))


# -- linear recurrence ------------------------------------------------------------


def test_linear_recurrence_examples():
    assert linear_recurrence_solution(0.5, 1.0, 2.0, 17) == pytest.approx(2.0)
    x = 0.0
    for _ in range(3):
        x = 0.5 * x + 1
    assert linear_recurrence_solution(0.5, 1.0, 0.0, 3) == pytest.approx(x) == pytest.approx(1.75)
    assert abs(linear_recurrence_solution(0.5, 1.0, 123.0, 50) - 2.0) < 1e-12
    with pytest.raises(ParameterError):
        linear_recurrence_solution(1.0, 1.0, 0.0, 1)


@given(st.floats(0.01, 0.99), st.floats(0, 10), st.floats(0, 100), st.integers(0, 200))
def test_linear_recurrence_matches_iteration_and_bounds(a, b, x0, t):
    x = x0
    for _ in range(t):
        x = a * x + b
    val = linear_recurrence_solution(a, b, x0, t)
    assert val == pytest.approx(x, rel=1e-9, abs=1e-9)
    lo, hi = sorted((x0, b / (1 - a)))
    assert lo - 1e-9 <= val <= hi + 1e-9


# -- threshold behaviour ----------------------------------------------------------


def _draw_local(rng, accept):
    while True:
        p = random_params(rng)
        if accept(r0_local_closed(p)):
            return p


def test_below_threshold_converges_to_dfe():
    # decay slows sharply as R0 -> 1, so draws stop at 0.99 to fit the 1e4 horizon
    rng = np.random.default_rng(31)
    for _ in range(5):
        p = _draw_local(rng, lambda r: r < 0.99)
        S_star = dfe_local(p).S
        for _ in range(10):
            x = LocalState(*rng.uniform(0.1, 200, size=4))
            for _ in range(10_000):
                x = seirs_step(p, x)
            assert x.E + x.I + x.R < 1e-8
            assert abs(x.S - S_star) < 1e-6


def test_above_threshold_persists():
    rng = np.random.default_rng(32)
    for _ in range(5):
        p = _draw_local(rng, lambda r: r > 1.0)
        for _ in range(4):
            x = LocalState(rng.uniform(1, 200), rng.uniform(0, 1), rng.uniform(0.01, 1), 0.0)
            tail = math.inf
            for t in range(1, 10_001):
                x = seirs_step(p, x)
                if t >= 5000:
                    tail = min(tail, x.E + x.I)
            assert tail > 1e-4
