"""Exception types shared across the package."""


class MirrorGameError(Exception):
    """Base class for all package-specific errors."""


class NonFiniteState(MirrorGameError):
    """An integrated state picked up a NaN or infinity (solver blow-up)."""


class GridMismatch(MirrorGameError):
    """Trajectories expected on one substep grid have different lengths."""


class LengthMismatch(MirrorGameError):
    """Paired series have different lengths."""


class EmptyGrid(MirrorGameError):
    """A resampling grid would be empty or degenerate."""


class TooShort(MirrorGameError):
    """A series is too short for the requested analysis."""


class DegenerateSamples(MirrorGameError):
    """Samples have zero spread, so no bandwidth can be inferred."""


class NonMonotonicTime(MirrorGameError):
    """Timestamps are not strictly increasing."""


class SchemaViolation(MirrorGameError):
    """A file does not match its schema.  ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(message)
        self.path = path
