"""
Errors raised by the numerical modules.

Configuration problems use Django's ``ImproperlyConfigured`` instead.
"""

__all__ = (
    "TilepressError",
    "DomainError",
    "PreconditionError",
    "CapacityError",
    "ConvergenceError",
    "InvariantViolation",
    "RangeError",
    "ConvexityGateError",
)


class TilepressError(Exception):
    """
    Base class of all library errors.
    """


class DomainError(TilepressError, ValueError):
    """
    A point lies outside the pillow.
    """


class PreconditionError(TilepressError, ValueError):
    """
    An operation was called outside its documented domain.
    """


class CapacityError(TilepressError):
    """
    The requested enumeration would exceed the configured capacity.
    """

    def __init__(self, message, count=None, capacity=None, suggested_level=None):
        super().__init__(message)
        self.count = count
        self.capacity = capacity
        self.suggested_level = suggested_level


class ConvergenceError(TilepressError):
    """
    An iteration did not reach its tolerance.
    """

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


class InvariantViolation(TilepressError):
    """
    A structural guarantee of the cell decompositions failed to hold.
    """


class RangeError(TilepressError, ValueError):
    """
    A level α lies outside the estimated energy range.
    """


class ConvexityGateError(TilepressError):
    """
    The pressure curve is flat: the potential looks co-homologous to a constant.
    """
