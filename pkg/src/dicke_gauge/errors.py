"""Exception hierarchy for the dicke-gauge library."""


class DickeError(Exception):
    """Base class for every error raised by dicke_gauge."""


class ValidationError(DickeError, ValueError):
    """Raised when model or run inputs fail validation.

    Attributes:
        fields: Mapping of offending field name to the reason it was rejected
    """

    def __init__(self, fields: dict[str, str]):
        self.fields = dict(fields)
        details = "; ".join(f"{name}: {reason}" for name, reason in self.fields.items())
        super().__init__(f"Invalid parameters ({', '.join(self.fields)}). {details}")


class DomainError(DickeError, ValueError):
    """Raised when an input lies outside the domain of an operation."""


class ContractViolation(DickeError, ValueError):
    """Raised when a caller breaks the precondition of an operation."""


class ResourceError(DickeError):
    """Raised when a dense allocation would exceed the configured limit."""

    def __init__(
        self,
        message: str,
        dimension: int | None = None,
        limit: int | None = None,
        best_tolerance: float | None = None,
    ):
        super().__init__(message)
        self.dimension = dimension
        self.limit = limit
        self.best_tolerance = best_tolerance


class EigensolverError(DickeError):
    """Raised when a LAPACK/ARPACK eigensolver fails."""


class BudgetError(DickeError):
    """Raised when a sweep plan exceeds its cell budget."""

    def __init__(self, cells: int, budget: int, what: str = "grid cells"):
        self.cells = cells
        self.budget = budget
        super().__init__(
            f"Sweep needs {cells} {what} but the budget is {budget}. "
            f"Reduce the axis counts or raise the limit (DICKE_SWEEP_MAX_CELLS / DICKE_ED_MAX_SOLVES)."
        )
