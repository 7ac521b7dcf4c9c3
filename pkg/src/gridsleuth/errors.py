"""Exception hierarchy shared across the package."""


class GridSleuthError(Exception):
    """Base class for all package errors."""


class TopologyError(GridSleuthError):
    """A network description violates a structural rule."""


class DuplicateIdError(TopologyError):
    pass


class InvalidIdError(TopologyError):
    pass


class SelfLoopError(TopologyError):
    pass


class DanglingEndpointError(TopologyError):
    pass


class NonRadialNormalStateError(TopologyError):
    pass


class BreakerNotAtSourceError(TopologyError):
    pass


class DimensionMismatchError(GridSleuthError):
    """A vector or matrix does not match the topology's dimensions."""


class NotABreakerError(GridSleuthError):
    """The referenced edge is not an FRTU-monitored feeder breaker."""


class UnknownNodeError(GridSleuthError):
    pass


class UnknownFrtuError(GridSleuthError):
    pass


class ZeroAggregateError(GridSleuthError):
    """FRTU aggregate is zero while meters reported nonzero energy."""


class CountOutOfRangeError(GridSleuthError):
    pass


class ProbabilityOutOfRangeError(GridSleuthError):
    pass


class EmptyHistoryError(GridSleuthError):
    pass


class MeterNotOnNodeError(GridSleuthError):
    pass


class InfeasiblePlanError(GridSleuthError):
    """No switching plan satisfies the keep-power-on constraints."""


class InfeasibleIsolationError(InfeasiblePlanError):
    """A microgrid cannot be islanded without darkening a grid load."""


class OracleInconsistentError(GridSleuthError):
    """FRTU alarm pattern contradicts the accumulated evidence."""
