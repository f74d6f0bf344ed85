"""
Exception hierarchy for the sinktrack package.
"""


class SinktrackError(Exception):
    """Base class for every error raised by sinktrack."""


class DimensionMismatchError(SinktrackError, ValueError):
    """Raised when cost, plan and mass vector shapes do not agree."""


class InvalidInputError(SinktrackError, ValueError):
    """Raised for inputs that violate a domain invariant (negative or non-finite cost, bad masses, size caps)."""


class UnknownColumnError(InvalidInputError):
    """Raised when a figure is grouped by a column the results table does not have."""


class NumericalInstabilityError(SinktrackError, ArithmeticError):
    """Raised when the unstabilized solver would overflow or underflow."""


class ConfigurationError(SinktrackError):
    """Raised for invalid environment configuration."""
