"""Exception hierarchy. The CLI maps the two families onto exit codes."""


class ViscapError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ViscapError, ValueError):
    """Invalid user input or violated precondition (CLI exit code 1)."""


class DomainError(ConfigurationError):
    """Argument outside the domain of an operation."""


class BranchCutError(DomainError):
    """Value on the excluded Davies ray of the sector square root."""


class PreconditionError(ConfigurationError):
    """A documented precondition of a numerical routine does not hold."""


class NumericalError(ViscapError, ArithmeticError):
    """A computation failed numerically (CLI exit code 2)."""


class ConvergenceError(NumericalError):
    """Iterative method hit its iteration cap."""


class SingularityError(NumericalError):
    """Evaluation at (or numerically at) a singular point."""


class ConditioningError(NumericalError):
    """Linear system too ill-conditioned to trust."""


class ContourError(NumericalError):
    """Contour integral failed integrality or hit a zero on the contour."""


class UnresolvedRegionError(NumericalError):
    """Zero counting could not be resolved inside a sub-rectangle."""

    def __init__(self, message, rectangle=None):
        super().__init__(message)
        self.rectangle = rectangle


class IdentityViolation(NumericalError):
    """Determinant count and eigenvalue count disagree."""
