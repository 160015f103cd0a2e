"""Exception hierarchy shared by all nsaflow modules."""


class NSAFlowError(Exception):
    """Base class for errors raised by nsaflow."""


class DimensionError(NSAFlowError, ValueError):
    """Shapes are incompatible or a matrix has the wrong dimensions."""


class DegenerateInputError(NSAFlowError, ValueError):
    """Input is degenerate for the requested operation (e.g. an all-zero matrix)."""


class ConfigError(NSAFlowError, ValueError):
    """A configuration value is out of range or inconsistent."""


class NonFiniteError(NSAFlowError, FloatingPointError):
    """A NaN or infinite value appeared where finite values are required."""
