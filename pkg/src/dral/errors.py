"""Exception types shared across the package."""


class DralError(Exception):
    """Base class for package errors."""


class StateError(DralError, RuntimeError):
    """Operation not valid for the current posterior state (e.g. labels not finalized)."""


class NumericalError(DralError, ArithmeticError):
    """A factorization or solve failed."""


class UnsupportedError(DralError, ValueError):
    """Requested kernel/diagnostic combination is not supported."""


class ConfigError(DralError, ValueError):
    """Invalid experiment configuration. ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DatasetError(DralError, ValueError):
    """Dataset file could not be parsed."""
