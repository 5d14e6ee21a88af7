"""Exception hierarchy shared by all simulator modules."""


class CalibrationError(Exception):
    """Base class for every error raised by nrcalib."""


class ConfigError(CalibrationError):
    """Invalid, unknown or missing configuration field(s)."""

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)


class ModelDomainError(CalibrationError, ValueError):
    """Geometry outside the validity range of a propagation model."""

    def __init__(self, message, bound=None, point=None):
        super().__init__(message)
        self.bound = bound
        self.point = point


class UnsupportedRingCountError(CalibrationError, ValueError):
    pass


class NotASiteError(CalibrationError, ValueError):
    pass


class EmptySampleError(CalibrationError, ValueError):
    pass


class ReferenceParseError(CalibrationError, ValueError):
    """Malformed reference CSV; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class DropError(CalibrationError):
    """Wraps a failure inside a single drop."""

    def __init__(self, drop, cause):
        super().__init__(f"drop {drop}: {cause}")
        self.drop = drop
        self.cause = cause
