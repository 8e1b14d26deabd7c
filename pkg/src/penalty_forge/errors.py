class PenaltyForgeError(Exception):
    """Base class for all library errors."""


class ConfigError(PenaltyForgeError):
    """Malformed or dimensionally inconsistent input."""


class GeometryError(PenaltyForgeError):
    """A geometric precondition does not hold (e.g. anchor not interior)."""


class DivergenceError(PenaltyForgeError):
    """An iterative path generator left its bounding box."""


class PathOrderError(PenaltyForgeError):
    """The f-values of a path cannot be grouped into a strictly decreasing sequence."""

    def __init__(self, message, indices):
        super().__init__(message)
        self.indices = list(indices)


class EmptyRegionError(PenaltyForgeError):
    """The intersection of path halfspaces has empty interior."""

    def __init__(self, message, certificate, radius):
        super().__init__(message)
        self.certificate = list(certificate)
        self.radius = radius


class BuildError(PenaltyForgeError):
    """The penalty construction could not be completed."""


class VerificationError(PenaltyForgeError):
    """The minimization oracle could not run (e.g. box too small)."""
