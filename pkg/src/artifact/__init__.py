"""Zeroth-order stochastic approximation and CPT-value optimization."""

from .cpt import (
    CptSpec,
    CptValue,
    DiscreteDistribution,
    UtilityFunction,
    WeightingFunction,
    cpt_estimate,
    cpt_exact_discrete,
    cpt_oracle,
    weighting_eval,
)
from .estimators import (
    EstimationError,
    GainSchedule,
    NoisyOracle,
    gain_at,
    kw_gradient,
    regularize_hessian,
    sample_rademacher,
    spsa_gradient,
    spsa_hessian,
)
from .kernels import BACKEND
from .optimize import (
    HessianConfig,
    OptimizationError,
    OptimizerConfig,
    RunTrace,
    cpt_spsa_optimize,
    exact_cpt_value,
    kw_descend,
    newton_2spsa,
    noise_rng,
    project,
    spsa_descend,
)
from .problems import (
    CptFamily,
    TestProblem,
    build_problem,
    make_cpt_bernoulli_family,
    make_cpt_quadratic2d_family,
    make_noisy_quadratic,
    make_noisy_rosenbrock,
)

__version__ = "0.1.0"
