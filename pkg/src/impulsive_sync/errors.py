"""Exception types raised across the package."""


class SyncError(Exception):
    """Base class for every error raised by impulsive_sync."""


class DimensionError(SyncError, ValueError):
    pass


class SingularMatrixError(SyncError):
    pass


class ConvergenceError(SyncError):
    pass


class NotNilpotentError(SyncError):
    pass


class ControllabilityError(SyncError):
    """The pair (e^{AT}, B) is not controllable to tolerance."""


class SpanningTreeError(SyncError):
    """The coupling graph has no spanning tree (Laplacian check failed)."""


class NumericalError(SyncError):
    """An internal consistency check failed."""


class SpecError(SyncError, ValueError):
    """Malformed run specification."""
