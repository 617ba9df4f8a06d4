"""Exception types raised across the package."""


class SingularQMEError(Exception):
    """Base class for all package errors."""


class UnsupportedError(SingularQMEError):
    """The requested operation is not available for this model."""


class NumericalFailureError(SingularQMEError):
    """A computation produced non-finite values."""


class ResourceError(SingularQMEError):
    """The request exceeds the supported problem size."""


class NotFoundError(SingularQMEError):
    """A searched-for time was not found in the scanned interval.

    ``min_value`` holds the smallest value of the scanned quantity.
    """

    def __init__(self, message, min_value=None):
        super().__init__(message)
        self.min_value = min_value


class IllConditionedError(SingularQMEError):
    """A linear solve is too ill-conditioned to trust."""

    def __init__(self, message, condition_number):
        super().__init__(message)
        self.condition_number = condition_number
