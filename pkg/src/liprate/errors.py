"""Exception types shared across the package."""


class LiprateError(Exception):
    pass


class DimensionError(LiprateError, ValueError):
    """Shape mismatch or empty operand."""


class ParseError(LiprateError, ValueError):
    """Malformed CSV content; carries the offending row index."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DegenerateFeatureError(LiprateError, ValueError):
    """Feature column whose scaling divisor would be (near) zero."""

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class InvalidBoundError(LiprateError, ValueError):
    """Nonpositive bound fed to a Lipschitz-constant formula."""


class InvalidClassCountError(LiprateError, ValueError):
    """Class count below 2 in a multiclass constant."""


class InvalidToleranceError(LiprateError, ValueError):
    """Nonpositive tolerance in the iteration bound."""


class ConfigurationError(LiprateError, ValueError):
    """Inconsistent model/experiment configuration."""


class DivergenceError(LiprateError, RuntimeError):
    """Nonfinite gradients or parameters during training."""


class DegenerateGradientError(LiprateError, RuntimeError):
    """Zero gradient norm or zero tracked constant where an inverse is needed."""


class UnsupportedMetricError(LiprateError, ValueError):
    """Metric requested for a task that does not define it."""
