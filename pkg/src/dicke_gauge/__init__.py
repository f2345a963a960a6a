"""Dicke Gauge - variational and exact ground states of the three-level Dicke model in four gauges."""

__version__ = "0.1.0"

from .errors import (
    BudgetError,
    ContractViolation,
    DickeError,
    DomainError,
    EigensolverError,
    ResourceError,
    ValidationError,
)
from .model import GaugeKind, ModelParams, validate_params
from .variational import Phase, VariationalSolution, solve_ground_state

__all__ = [
    "BudgetError",
    "ContractViolation",
    "DickeError",
    "DomainError",
    "EigensolverError",
    "GaugeKind",
    "ModelParams",
    "Phase",
    "ResourceError",
    "ValidationError",
    "VariationalSolution",
    "__version__",
    "solve_ground_state",
    "validate_params",
]
