"""Changepoint tests and power analysis for segmented regression models.

The package tests for a single changepoint at an unknown location --
a pseudo-score test for segmented generalized linear models, the
maximal two-sample t statistic for a Gaussian mean shift, and a
trimmed likelihood-ratio scan for binary responses -- and computes
analytic power, sample size, and post-experimental power for the
broken-line alternative.
"""

from .errors import (
    BoundaryError,
    ConfigurationError,
    ConvergenceError,
    DegenerateCovariateError,
    DegenerateSeriesError,
    DegreesOfFreedomError,
    DimensionError,
    DomainError,
    FlatFitError,
    IngestionError,
    NonIdentifiableError,
    ParseError,
    RankError,
    SegpowerError,
    SizeError,
    UnreachableTargetError,
    UnsupportedAlphaError,
)
from .model_core import (
    BINOMIAL,
    GAUSSIAN,
    DesignMatrix,
    FitOptions,
    NullFit,
    build_design,
    fit_null_binomial,
    fit_null_gaussian,
)
from .power import (
    CovariateSpec,
    PowerRequest,
    PowerResult,
    SegmentedFit,
    compute_power,
    expected_s0,
    fit_segmented,
    parse_covariate_spec,
    posthoc_power,
    power_from_e1,
    realize_covariate,
    sample_size,
)
from .pscore import (
    BROKEN_LINE,
    DEFAULT_K,
    JUMP,
    PScoreResult,
    SegmentedTermSpec,
    candidate_psis,
    estimate_changepoint,
    make_term_spec,
    phi,
    phi_bar,
    pscore_statistic,
)
from .simlab import (
    BinaryScenario,
    NormalScenario,
    RejectionRow,
    RejectionTable,
    load_scenarios,
    rejection_rates,
    simulate_normal_jump,
    simulate_rasch,
)
from .tfcp_tests import (
    LmaxConfig,
    LmaxResult,
    Series,
    TmaxResult,
    l_max_binary,
    rasch_theta_mle,
    t_max,
    w_max_test,
    worsley_critical,
)

__version__ = "0.1.0"

__all__ = [
    "BINOMIAL",
    "BROKEN_LINE",
    "BinaryScenario",
    "BoundaryError",
    "ConfigurationError",
    "ConvergenceError",
    "CovariateSpec",
    "DEFAULT_K",
    "DegenerateCovariateError",
    "DegenerateSeriesError",
    "DegreesOfFreedomError",
    "DesignMatrix",
    "DimensionError",
    "DomainError",
    "FitOptions",
    "FlatFitError",
    "GAUSSIAN",
    "IngestionError",
    "JUMP",
    "LmaxConfig",
    "LmaxResult",
    "NonIdentifiableError",
    "NormalScenario",
    "NullFit",
    "PScoreResult",
    "ParseError",
    "PowerRequest",
    "PowerResult",
    "RankError",
    "RejectionRow",
    "RejectionTable",
    "SegmentedFit",
    "SegmentedTermSpec",
    "SegpowerError",
    "Series",
    "SizeError",
    "TmaxResult",
    "UnreachableTargetError",
    "UnsupportedAlphaError",
    "build_design",
    "candidate_psis",
    "compute_power",
    "estimate_changepoint",
    "expected_s0",
    "fit_null_binomial",
    "fit_null_gaussian",
    "fit_segmented",
    "l_max_binary",
    "load_scenarios",
    "make_term_spec",
    "parse_covariate_spec",
    "phi",
    "phi_bar",
    "posthoc_power",
    "power_from_e1",
    "pscore_statistic",
    "rasch_theta_mle",
    "realize_covariate",
    "rejection_rates",
    "sample_size",
    "simulate_normal_jump",
    "simulate_rasch",
    "t_max",
    "w_max_test",
    "worsley_critical",
]
