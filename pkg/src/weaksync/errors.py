"""Exception hierarchy shared by every weaksync module."""


class WeakSyncError(Exception):
    """Base class for all errors raised by this package."""


class GraphValidationError(WeakSyncError, ValueError):
    """An adjacency matrix violates the weighted-digraph invariants."""


class StructuralError(WeakSyncError):
    """A computed structure contradicts a property that must hold.

    Raised for singular grounded Laplacians, negative convex weights and
    similar situations that indicate a decomposition bug or a numerically
    degenerate input.
    """


class DimensionError(WeakSyncError, ValueError):
    """Matrix blocks do not fit together."""


class SimulationDiverged(WeakSyncError):
    def __init__(self, time, norm):
        self.time = time
        self.norm = norm
        super().__init__(f"state diverged at t={time:g} (|x|_inf={norm:.3g})")


class PreconditionError(WeakSyncError):
    """An analysis was requested whose preconditions are not met."""


class ConfigError(WeakSyncError, ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
