"""Characteristic-based solver for Hamilton-Jacobi equations with scheduled jumps."""

__version__ = "0.1.0"

SCHEMA_VERSION = 1

from .problem import (  # noqa: E402
    Constants,
    HypothesisReport,
    JumpSchedule,
    NumericsConfig,
    ProblemSpec,
    derive_constants,
    validate_hypotheses,
)

__all__ = [
    "SCHEMA_VERSION",
    "Constants",
    "HypothesisReport",
    "JumpSchedule",
    "NumericsConfig",
    "ProblemSpec",
    "derive_constants",
    "validate_hypotheses",
    "__version__",
]
