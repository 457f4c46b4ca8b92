"""Exception types raised by the diffsr pipeline."""


class DiffSRError(Exception):
    """Base class for all diffsr errors."""


class DimensionMismatch(DiffSRError, ValueError):
    """Grid shapes are inconsistent with each other or with the scale factor."""


class NonFiniteInput(DiffSRError, ValueError):
    """An input array contains NaN or infinity where finite values are required."""


class NonPositiveSource(DiffSRError, ValueError):
    """A valid source pixel is <= 0; the adjustment step assumes positive depths."""


class InvalidKappa(DiffSRError, ValueError):
    """Gradient-sensitivity parameter must be a finite positive number."""


class InvalidLambda(DiffSRError, ValueError):
    """Update-rate parameter must lie strictly inside (0, 0.25)."""


class ZeroBlockMean(DiffSRError, ArithmeticError):
    """A block of the diffused target averaged to <= 1e-12, so the adjustment
    ratio is undefined. Unreachable for positive inputs; indicates a pipeline bug."""


class EmptySource(DiffSRError, ValueError):
    """The source grid contains no valid pixels."""


class NoValidPixels(DiffSRError, ValueError):
    """Two grids share no jointly valid pixels."""


class NoConvergence(DiffSRError, RuntimeError):
    """The reference solver hit its iteration cap before reaching tolerance."""


class UnsupportedFormat(DiffSRError, ValueError):
    """File is not one of the supported formats, or uses an unsupported profile."""


class CorruptFile(DiffSRError, ValueError):
    """File matched a known format but its contents are malformed."""


class OutOfRange(DiffSRError, ValueError):
    """Values cannot be represented in the requested output format."""


class IoFailure(DiffSRError, OSError):
    """Underlying read/write operation failed."""
