"""Exception types raised by the solver."""


class ConfigurationError(ValueError):
    """Invalid grid, material, point or scenario description."""


class OutOfDomainError(RuntimeError):
    """A material point (or its GIMP domain) left the background grid."""


class DivergenceError(RuntimeError):
    """Numerical breakdown: singular system, inverted point, non-finite state."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class PointCloudParseError(ValueError):
    """Malformed point-cloud CSV; carries the offending line number."""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line
