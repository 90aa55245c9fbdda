"""Exception types shared across the package."""


class MwisError(Exception):
    """Base class for all package errors."""


class InstanceError(MwisError, ValueError):
    """A problem instance or configuration is malformed (wrong sizes, empty data)."""


class ParameterError(MwisError, ValueError):
    """A numeric parameter is outside its allowed range."""


class CapacityError(MwisError):
    """The requested instance is too large for exhaustive or dense treatment."""


class DomainError(MwisError, ValueError):
    """A function was evaluated outside its domain (e.g. time outside a schedule)."""


class EmbeddingError(MwisError):
    """An embedding failed validation.

    ``weights`` carries the logical weighting that exposed the failure.
    """

    def __init__(self, message, weights=None):
        super().__init__(message)
        self.weights = weights


class CalibrationError(MwisError):
    """The light-shift feedback loop cannot proceed or is diverging."""


class IntegrationError(MwisError):
    """Time evolution lost accuracy (norm drift above tolerance)."""
