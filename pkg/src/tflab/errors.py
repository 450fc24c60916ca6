"""Exception hierarchy shared by every tflab module."""


class TFLabError(Exception):
    """Base class for all tflab errors."""


class ConfigurationError(TFLabError, ValueError):
    """Grid or configuration is malformed (bad length, unknown key, ...)."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ParameterError(TFLabError, ValueError):
    """A numeric parameter lies outside its admissible range."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ConstraintError(ParameterError):
    """An exponent configuration violates the hypotheses of the bound it targets."""


class DegenerateIntervalError(TFLabError, ValueError):
    """A frequency interval has too few bins for the requested construction."""


class IntegrityError(TFLabError):
    """An independently recomputed invariant does not hold."""
