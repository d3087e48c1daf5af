class PLGPError(ValueError):
    """Base class for every error raised by the plgp library."""


class DimensionError(PLGPError):
    """Inputs whose shapes do not agree."""


class DecompositionError(PLGPError):
    """A correlation or scale matrix lost positive definiteness.

    MH callers treat this as a rejection of the proposed parameters.
    """

    def __init__(self, message, quantity=None):
        super().__init__(message)
        self.quantity = quantity


class DegenerateDesignError(PLGPError):
    """F^T K^-1 F is singular, e.g. every input row is identical."""


class ImproperPosteriorError(PLGPError):
    """Too few data points for the improper (a = b = 0) variance prior."""


class WeightError(PLGPError):
    """Every resample weight vanished or was not a number."""

    def __init__(self, message, particles=()):
        super().__init__(message)
        self.particles = list(particles)


class UndefinedAcquisitionError(PLGPError):
    """Expected improvement requested with ν <= 1."""


class DataFormatError(PLGPError):
    """Malformed CSV input."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class SnapshotError(PLGPError):
    """A particle snapshot with an unknown version or inconsistent content."""
