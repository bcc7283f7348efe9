"""Mirror-prox solvers for monotone variational inequalities.

The step-size policies are universal: they never need smoothness or
boundedness constants, only the Bregman diameter of the feasible set and
an accumulator of divergence-based statistics between consecutive
iterates.
"""

from .geometry import Ball, Box, BregmanGeometry, FeasibleSet, Product, Simplex
from .problems import (
    BREGMAN_BOUNDED,
    BREGMAN_SMOOTH,
    CATALOG,
    LIPSCHITZ_BOUNDED,
    LIPSCHITZ_SMOOTH,
    MonotoneProblem,
    RegularityClass,
    certify_regularity,
    evaluate,
    geometry_for,
    get_problem,
    make_entropic_toy,
    make_matrix_game,
    make_max_quadratics,
    make_nplayer_quadratic,
    make_quadratic,
    monotonicity_min,
    saddle_gap,
)
from .solver import (
    AdaptiveLBeta,
    FixedStep,
    RunReport,
    SolverState,
    UniversalStep,
    make_policy,
    mp_iterate,
    run,
    z_bound_check,
)
from .stochastic import NoiseModel, NoisyOracle, martingale_lemma_check
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    SlopeEstimate,
    brute_force_game,
    emit_csv,
    estimate_slope,
    lemma_suite,
    load_config,
    parse_csv,
    run_experiment,
)

__version__ = "0.1.0"
