class CharacterisationError(Exception):
    """
    Base class for every error raised by the characterisation toolkit.

    Attributes:
        kind (str): Stable slug naming the failure (e.g. 'invalid-config').
    """

    kind = "characterisation-error"

    def __init__(self, message, kind=None):
        super().__init__(message)
        if kind is not None:
            self.kind = kind


class InvalidConfigError(CharacterisationError, ValueError):
    kind = "invalid-config"


class DegeneratePlaneError(CharacterisationError):
    kind = "degenerate-plane"


class DimensionMismatchError(CharacterisationError):
    kind = "dimension-mismatch"


class FrameFormatError(CharacterisationError):
    """Raised for unreadable frame files: malformed-header, dimension-mismatch,
    value-exceeds-bit-depth or missing-sidecar."""

    kind = "malformed-header"


class CurveFormatError(CharacterisationError):
    """Raised for malformed-csv and non-monotonic-frequency curve files."""

    kind = "malformed-csv"


class ScheduleMismatchError(CharacterisationError):
    kind = "schedule-mismatch"


class TooFewPointsError(CharacterisationError):
    kind = "too-few-points"


class RenderError(CharacterisationError):
    """Raised for empty-input and label-mismatch plot requests."""

    kind = "empty-input"
