"""Exception types raised across the package."""


class RislocError(Exception):
    """Base class for all package errors."""


class DegenerateGeometry(RislocError, ValueError):
    """A position where angles or path differences are undefined."""


class InvalidStep(RislocError, ValueError):
    pass


class ShapeError(RislocError, ValueError):
    pass


class ScheduleError(RislocError, ValueError):
    pass


class BasisDegenerate(RislocError, ValueError):
    """Beam basis columns are (numerically) linearly dependent."""


class CapacityError(RislocError, ValueError):
    pass


class InvalidBeam(RislocError, ValueError):
    pass


class ConfigError(RislocError, ValueError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
