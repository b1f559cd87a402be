"""Exception types shared across the toolkit."""


class AudioFormatError(ValueError):
    """Raised when a file is not a readable PCM-16 RIFF/WAVE stream."""


class EntropyUndefinedError(ValueError):
    """Raised when entropy is requested for a spectrum with zero total energy."""


class PhaseMissingError(ValueError):
    """Raised when an operation needs a cough phase that was not found."""


class SegmentTooShortError(ValueError):
    """Raised when a segment is too short to hold a single analysis frame."""


class InsufficientDataError(ValueError):
    """Raised when a fit needs more rows than were supplied."""


class StratificationError(ValueError):
    """Raised when a stratified split cannot be formed (class too small)."""


class DivergenceError(RuntimeError):
    """Raised when training hits a non-finite loss; carries the epoch."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class ShapeError(ValueError):
    """Raised when an input's shape does not match what a model expects."""


class ModelFormatError(ValueError):
    """Raised when a model file is corrupt, has bad magic, or a wrong version."""


class SynthesisParameterError(ValueError):
    """Raised when cough synthesis parameters are out of their valid ranges."""
