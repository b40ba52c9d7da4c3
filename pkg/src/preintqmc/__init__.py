"""Estimation of the distribution and density of an elliptic-PDE quantity
of interest by preintegration and CBC-constructed randomly shifted lattice
rules."""

from .errors import (
    CoefficientOverflowError,
    ConfigError,
    DiracEvaluationError,
    MonotonicityError,
    PreintQmcError,
    SolverError,
    WeightDivergenceError,
)
from .fields import FieldExpansion, make_sine_family

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "FieldExpansion",
    "make_sine_family",
    "PreintQmcError",
    "ConfigError",
    "MonotonicityError",
    "CoefficientOverflowError",
    "SolverError",
    "WeightDivergenceError",
    "DiracEvaluationError",
]
