"""Exception hierarchy shared by all irsplace modules."""


class IrsPlaceError(Exception):
    """Base class for every error raised by this package."""


class DegenerateGeometryError(IrsPlaceError, ValueError):
    """Coincident points or otherwise undefined geometry."""


class ReflectorDegenerateError(DegenerateGeometryError):
    """Sized reflector cannot hold a single unit cell."""


class BehindSurfaceError(DegenerateGeometryError):
    """Incidence angle at or beyond 90 degrees."""


class ShapeError(IrsPlaceError, ValueError):
    """Matrix dimensions do not chain."""


class NoChannelError(IrsPlaceError, ValueError):
    """Channel has no non-zero singular value."""


class InstanceTooLargeError(IrsPlaceError):
    """Enumeration oracle guard exceeded."""


class ScenarioError(IrsPlaceError, ValueError):
    """Scenario file could not be parsed or failed validation."""
