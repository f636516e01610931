"""Exception types raised across the package."""


class PoissonLabError(Exception):
    pass


class BallEscapesSupportError(PoissonLabError, ValueError):
    """A ball B(x, r) is not contained in the support box A."""


class NonFiniteDensityError(PoissonLabError, ValueError):
    pass


class MassExceedsReachError(PoissonLabError, ValueError):
    """Requested ball mass is larger than any ball around x inside A can hold."""


class BelowT0Error(PoissonLabError, ValueError):
    """Threshold equations have no solution inside A; t is below t0."""


class NonPositiveMinimumError(PoissonLabError, ValueError):
    pass


class InfiniteIntensityError(PoissonLabError, ValueError):
    pass


class OrderingViolationError(PoissonLabError, ValueError):
    """Sandwich densities are not ordered f1 <= phi <= f2."""


class UnsupportedDimensionError(PoissonLabError, ValueError):
    pass


class EmptyNeighborhoodError(PoissonLabError, ValueError):
    pass


class MarginTooSmallError(PoissonLabError, RuntimeError):
    """A statistic looked further than the simulated margin around W."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class InsufficientReplicatesError(PoissonLabError, ValueError):
    pass


class SupportExceededError(PoissonLabError, ValueError):
    pass


class EmptySampleError(PoissonLabError, ValueError):
    pass


class ConfigError(PoissonLabError, ValueError):
    pass


class DegeneratePositionWarning(UserWarning):
    """Nucleus lies on the boundary of its neighbours' convex hull."""
