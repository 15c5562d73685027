"""Exception types shared across the package."""


class RingformError(Exception):
    """Base class for all package-specific errors."""


class CollocatedVehicles(RingformError):
    """Two vehicles are too close for a bearing to be defined."""


class InfeasibleTarget(RingformError):
    """The requested angle targets admit no closed polygon realization."""


class InfeasibleScenario(RingformError):
    """Initial state fails a feasibility check required for convergence.

    Carries the offending report so callers can inspect which check failed.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CollisionImminent(RingformError):
    """A step would drive the minimum pairwise distance to the floor.

    When raised from a full run, ``record`` holds the partial trajectory.
    """

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class NotConverged(RingformError):
    """An operation requiring a converged trajectory got an unfinished one."""


class HypothesisViolated(RingformError):
    """A matrix handed to a spectral check fails its structural hypotheses."""


class ScenarioError(RingformError):
    """A scenario file is malformed or fails field validation."""
