"""Exception types raised across the package."""


class SubcalcError(Exception):
    """Base class for library errors."""


class DomainError(SubcalcError, ValueError):
    """An argument is outside the supported domain (e.g. scheme order p > 5)."""


class PreconditionError(SubcalcError, ValueError):
    """Inputs are individually valid but inconsistent with each other."""


class ConvergenceError(SubcalcError):
    """An iterative or truncated computation did not reach its tolerance.

    ``estimate`` and ``error_bound`` carry the best value obtained.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class ConditioningError(SubcalcError):
    """A linear system is too ill-conditioned to solve reliably."""


class GridFormatError(SubcalcError, ValueError):
    """Sampled input data does not lie on a uniform grid."""
