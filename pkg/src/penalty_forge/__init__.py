"""Convex penalties that turn optimization paths into regularization paths."""
from .convex_core import LossSpec, SubgradientOracle, halfspace_plus, make_oracle, signed_margin
from .errors import (
    BuildError,
    ConfigError,
    DivergenceError,
    EmptyRegionError,
    GeometryError,
    PathOrderError,
    PenaltyForgeError,
    VerificationError,
)
from .pathkit import (
    SearchPath,
    check_admissibility,
    group_by_value,
    ingest_path,
    run_gradient_descent,
    sort_path,
    ultimate_region,
)
from .penalty_builder import PenaltyModel, build_model, extract_lambdas
from .pipeline import run_pipeline
from .tolerances import DEFAULT, Tolerances
from .verifier import ContinuousPath, approximate_continuous, minimize_penalized, verify_schedule

__version__ = "0.1.0"

__all__ = [
    "BuildError", "ConfigError", "ContinuousPath", "DEFAULT", "DivergenceError", "EmptyRegionError",
    "GeometryError", "LossSpec", "PathOrderError", "PenaltyForgeError", "PenaltyModel", "SearchPath",
    "SubgradientOracle", "Tolerances", "VerificationError", "approximate_continuous", "build_model",
    "check_admissibility", "extract_lambdas", "group_by_value", "halfspace_plus", "ingest_path",
    "make_oracle", "minimize_penalized", "run_gradient_descent", "run_pipeline", "signed_margin",
    "sort_path", "ultimate_region", "verify_schedule",
]
