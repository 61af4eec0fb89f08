"""Discrete-time SEIRS epidemics on metapopulations with fast movement."""

from .errors import (
    EpiscaleError,
    HypothesisViolation,
    NoConvergence,
    NumericalFailure,
    ParameterError,
    PartialResult,
    UnsupportedModelError,
)
from .seirs import (
    BevertonHolt,
    Constant,
    EpidemicParams,
    Geometric,
    LocalState,
    Poisson,
    Ricker,
    Standard,
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
from .metapop import (
    GlobalState,
    MetapopModel,
    MovementModel,
    aggregate,
    dissipativity_bound,
    fast_iterate,
    fast_step,
    full_step,
    metapop_state,
    simulate,
    slow_map,
)
from .reduction import (
    ReducedParams,
    StationaryProfile,
    dfe_reduced,
    distribute,
    find_fixed_point,
    lift_equilibrium,
    r0_reduced,
    reduced_map,
    reduced_params,
    reduced_step,
    stationary_distribution,
    timescale_convergence,
)
from .analysis import (
    boundary_line,
    infected_mass,
    two_patch_r0_bar,
    Feasibility,
    TwoPatchInfectiousParams,
    TwoPatchSharedParams,
    Verdict,
    classify_asymptotics,
    eradication_feasibility,
    region_sweep,
    spectral_radius,
    two_patch_A,
    two_patch_g,
)

__version__ = "0.1.0"
