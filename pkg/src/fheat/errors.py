"""Exception hierarchy shared by every module."""


class FHeatError(Exception):
    """Base class for all errors raised by fheat."""


class DomainError(FHeatError, ValueError):
    """Argument lies outside the domain where a quantity is defined."""


class ParameterError(FHeatError, ValueError):
    """Inconsistent or missing parameters."""


class ShapeError(FHeatError, ValueError):
    """Field and grid (or space) do not match."""


class PreconditionError(FHeatError):
    """A hypothesis of a theorem does not hold for the supplied data."""

    def __init__(self, message, radius=None):
        super().__init__(message)
        self.radius = radius


class BoundAuditError(FHeatError):
    """A solution violates its declared bounds (D, delta, or mu - g >= 1)."""


class StabilityError(FHeatError):
    """Time step could not keep the solution positive."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class SaturationError(FHeatError, OverflowError):
    """Result overflows double precision."""


class ConstructionError(FHeatError):
    """A constructed object fails one of its defining properties."""


class NumericError(FHeatError):
    """An iterative numerical routine did not converge."""


class ConfigError(FHeatError, ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
