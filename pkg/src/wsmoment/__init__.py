"""Sublinear moment estimation under weighted-sampling oracles."""

from .core import (
    PAPER_PROFILE,
    TEST_PROFILE,
    BudgetBreakdown,
    ConstantProfile,
    DegenerateParameters,
    EmptyInstance,
    EstimateReport,
    EstimatorParams,
    InvalidFamilyParams,
    InvalidParams,
    InvalidWeight,
    MomentError,
    NoCollision,
    TooLarge,
    UnsupportedExponent,
    WeightedInstance,
    ZeroTotalWeight,
    validate_instance,
)
from .estimators import SumEstimate, estimate_moment, estimate_sum, required_budget
from .exact import (
    DensityReport,
    HitProbability,
    exact_moment,
    lb_hit_probability,
    moment_density_bruteforce,
    moment_density_closed,
)
from .instances import (
    FewHeavy,
    LowerBoundPair,
    PowerLaw,
    Uniform,
    gen_lb_density,
    gen_lb_proportional,
    gen_lb_small_t,
    gen_synthetic,
)
from .oracles import OracleHandle, SampleKind, build_coupled_oracles, build_oracle, derive_seed
from .harness import TrialStats, distinguishability_report, run_trials, write_report

__version__ = "0.1.0"
