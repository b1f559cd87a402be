"""coughpoc: point-of-care cough analysis toolkit.

Detects coughs in audio, segments their phases, extracts spectral features,
fuses them with simple sensor readings, and classifies the result into
respiratory-illness classes with per-class membership scores.
"""

__version__ = "0.1.0"

from .audio import CANONICAL_RATE_HZ, AudioClip, load_wav, resample, save_wav

__all__ = [
    "AudioClip",
    "CANONICAL_RATE_HZ",
    "load_wav",
    "save_wav",
    "resample",
    "__version__",
]
