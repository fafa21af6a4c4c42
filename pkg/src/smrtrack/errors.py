"""Exception types shared across the package."""


class TrackError(Exception):
    """Base class for every error this package raises on purpose."""


class DecodeError(TrackError):
    """Image payload could not be decoded.

    ``field`` names the header field or stream section at fault.
    """

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


class OutOfBoundsError(TrackError):
    """A box or search window does not fit inside its frame.

    ``edge`` is the violated side: "left", "top", "right" or "bottom".
    """

    def __init__(self, edge: str, message: str):
        super().__init__(message)
        self.edge = edge


class DimensionError(TrackError):
    """Operands that must share dimensions do not."""


class ConfigError(TrackError):
    """Invalid tracker configuration value or configuration file."""


class FormatError(TrackError):
    """Malformed line-oriented text input; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(message)
        self.line_number = line_number


class SpecError(TrackError):
    """Synthetic-sequence description violates its own constraints."""
