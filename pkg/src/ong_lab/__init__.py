"""Simulation library for the on-line nearest-neighbour graph on uniform
random points in the unit cube, with the estimators and closed-form
constants needed to check its limit behaviour by Monte Carlo."""

from __future__ import annotations

from .errors import (
    ConfigError,
    ContractViolationError,
    DimensionMismatchError,
    EmptyIndexError,
    InsufficientDataError,
    OracleMismatchError,
    RegimeError,
    UnsupportedDimensionError,
)
from .experiments import (
    ExperimentConfig,
    PlannedJob,
    RunResult,
    load_config,
    plan_grid,
    run,
    validate_config,
)
from .geom import (
    Point,
    PointSequence,
    PoissonDraw,
    RandomStream,
    label_from_text,
    lex_compare,
    sample_binomial_process,
    sample_poisson_count,
    squared_distance,
    uniform_open,
)
from .nnindex import GridIndex, NnAnswer, SearchStats, brute_force_nearest
from .ong import (
    GainVector,
    OngEdge,
    OngGraph,
    PoissonizedTotal,
    RootedWeights,
    build_ong,
    gains,
    poissonized_total,
    rooted_weights,
    total_weight,
)
from .resample import (
    ConditionedSecondMoment,
    ResampleBreakdown,
    TailIncrement,
    estimate_conditioned_second_moment,
    resample_breakdown,
    tail_increment_l2,
)
from .stats import (
    EstimateSummary,
    SlopeFit,
    from_samples,
    loglog_slope,
    merge,
    update,
    variance_ci,
)
from .theory import (
    RegimePrediction,
    TheoryConstants,
    gain_leading,
    lln_constant,
    mu_1d,
    predicted_regimes,
    theory_constants,
    unit_ball_volume,
)
from .voronoi import (
    ConeRadius1D,
    VoronoiDiameterEstimate,
    cone_radius_1d,
    voronoi_diameter,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "PlannedJob",
    "RunResult",
    "load_config",
    "plan_grid",
    "run",
    "validate_config",
    "ContractViolationError",
    "DimensionMismatchError",
    "EmptyIndexError",
    "InsufficientDataError",
    "OracleMismatchError",
    "RegimeError",
    "UnsupportedDimensionError",
    "Point",
    "PointSequence",
    "PoissonDraw",
    "RandomStream",
    "label_from_text",
    "lex_compare",
    "sample_binomial_process",
    "sample_poisson_count",
    "squared_distance",
    "uniform_open",
    "GridIndex",
    "NnAnswer",
    "SearchStats",
    "brute_force_nearest",
    "GainVector",
    "OngEdge",
    "OngGraph",
    "PoissonizedTotal",
    "RootedWeights",
    "build_ong",
    "gains",
    "poissonized_total",
    "rooted_weights",
    "total_weight",
    "ConditionedSecondMoment",
    "ResampleBreakdown",
    "TailIncrement",
    "estimate_conditioned_second_moment",
    "resample_breakdown",
    "tail_increment_l2",
    "EstimateSummary",
    "SlopeFit",
    "from_samples",
    "loglog_slope",
    "merge",
    "update",
    "variance_ci",
    "RegimePrediction",
    "TheoryConstants",
    "gain_leading",
    "lln_constant",
    "mu_1d",
    "predicted_regimes",
    "theory_constants",
    "unit_ball_volume",
    "ConeRadius1D",
    "VoronoiDiameterEstimate",
    "cone_radius_1d",
    "voronoi_diameter",
    "__version__",
]
