"""Exception types shared across the package."""


class FastJLError(Exception):
    """Base class for all package errors."""


class DimensionError(FastJLError, ValueError):
    """Shapes or lengths are incompatible, or not a power of two where required."""


class PlanningError(FastJLError, ValueError):
    """A dimension plan cannot be realized (e.g. n exceeds the padded dimension)."""


class EmptyReportError(FastJLError, ValueError):
    """A distortion report was requested for a point set with no nonzero columns."""


class InstanceTooLargeError(FastJLError, ValueError):
    """A brute-force check would enumerate more supports than the guard allows."""


class CalibrationError(FastJLError):
    """No grid value met the target failure rate."""
