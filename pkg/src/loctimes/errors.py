"""Exception types shared across the package."""


class LoctimesError(Exception):
    """Base class for package-specific errors."""


class MeasureConfigError(LoctimesError, ValueError):
    """A measure config (dict, YAML/JSON file, or CLI string) is malformed.

    The message names the offending field.
    """


class ValidityError(LoctimesError, ValueError):
    """A bound certificate was requested outside its validity range.

    Carries the violated threshold so callers can report it.
    """

    def __init__(self, message, *, epsilon_max=None):
        super().__init__(message)
        self.epsilon_max = epsilon_max


class QuadratureError(LoctimesError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested accuracy."""

    def __init__(self, message, *, estimate=None, abserr=None):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr


class CapacityError(LoctimesError, MemoryError):
    """A request would materialize more data than the in-memory cap allows."""
