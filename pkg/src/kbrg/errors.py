"""Exception types shared across the package."""


class KbrgError(Exception):
    """Base class for all package errors."""


class ParameterError(KbrgError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(KbrgError, ValueError):
    """The requested point lies outside the mathematical domain of the operation."""


class DataError(KbrgError, ValueError):
    """Input data is malformed (non-finite entries, empty pools, ...)."""


class ResourceLimitError(KbrgError, RuntimeError):
    """A desk-scale resource cap would be exceeded."""


class NumericalError(KbrgError, ArithmeticError):
    """A numerical guard tripped (near-zero denominator, lost Herglotz bound)."""


class StateError(KbrgError, RuntimeError):
    """Operation called on an object in the wrong state (e.g. unconverged field)."""


class ConvergenceError(KbrgError, RuntimeError):
    """Fixed-point iteration did not reach tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PartialResultError(KbrgError, RuntimeError):
    """Some abscissae of a scan failed; carries the partial table."""

    def __init__(self, message, failed, partial=None):
        super().__init__(message)
        self.failed = list(failed)
        self.partial = partial
