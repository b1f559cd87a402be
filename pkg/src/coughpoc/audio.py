"""Audio container plus PCM-16 WAV reading/writing and resampling.

Everything downstream works on mono float samples in [-1, 1]. The canonical
sampling rate for cough material is 22,050 Hz; callers resample before
analysis when a file arrives at another rate.
"""

from __future__ import annotations

import io
import wave
from dataclasses import dataclass, field

import numpy as np

from .errors import AudioFormatError

CANONICAL_RATE_HZ = 22_050

# Full-scale divisor for 16-bit PCM.  Encoding rounds at the same scale and
# clips the lone unreachable code (+32768), so a decode/encode round trip
# stays within one least-significant bit.
_PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class AudioClip:
    """Mono audio: float samples in [-1, 1] and their sampling rate."""

    samples: np.ndarray
    sample_rate_hz: int
    clipped: bool = field(default=False, compare=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("AudioClip needs a non-empty 1-D sample array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioClip samples must be finite")
        if int(self.sample_rate_hz) <= 0:
            raise ValueError("sample_rate_hz must be a positive integer")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


def load_wav(path) -> AudioClip:
    """Read a PCM-16 RIFF/WAVE file as a mono AudioClip.

    Stereo content is averaged down to one channel; samples are scaled to
    [-1, 1] by 1/32768.  Anything that is not 16-bit PCM is rejected with
    AudioFormatError.  Inputs that sit at full scale are accepted and only
    flagged via ``clipped``.
    """
    try:
        with wave.open(str(path), "rb") as wav:
            n_channels = wav.getnchannels()
            sample_width = wav.getsampwidth()
            rate = wav.getframerate()
            n_frames = wav.getnframes()
            raw = wav.readframes(n_frames)
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"{path}: not a readable RIFF/WAVE file ({exc})") from exc
    if sample_width != 2:
        raise AudioFormatError(
            f"{path}: only PCM 16-bit is supported, got {8 * sample_width}-bit"
        )
    if n_channels not in (1, 2):
        raise AudioFormatError(f"{path}: expected mono or stereo, got {n_channels} channels")
    if n_frames == 0:
        raise AudioFormatError(f"{path}: file contains no samples")

    pcm = np.frombuffer(raw, dtype="<i2").astype(np.float64)
    if n_channels == 2:
        pcm = pcm.reshape(-1, 2).mean(axis=1)
    samples = pcm / _PCM16_SCALE
    clipped = bool(np.any(np.abs(pcm) >= _PCM16_SCALE - 1))
    return AudioClip(samples=samples, sample_rate_hz=rate, clipped=clipped)


def save_wav(clip: AudioClip, path) -> None:
    """Write a clip as mono PCM-16 little-endian WAV."""
    pcm = np.clip(np.round(clip.samples * _PCM16_SCALE), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(clip.sample_rate_hz)
        wav.writeframes(pcm.tobytes())


def load_wav_bytes(data: bytes) -> AudioClip:
    """Decode an in-memory WAV payload (used by the upload service)."""
    buf = io.BytesIO(data)
    try:
        with wave.open(buf, "rb") as wav:
            n_channels = wav.getnchannels()
            sample_width = wav.getsampwidth()
            rate = wav.getframerate()
            n_frames = wav.getnframes()
            raw = wav.readframes(n_frames)
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"payload is not a readable RIFF/WAVE stream ({exc})") from exc
    if sample_width != 2:
        raise AudioFormatError(f"only PCM 16-bit is supported, got {8 * sample_width}-bit")
    if n_channels not in (1, 2):
        raise AudioFormatError(f"expected mono or stereo, got {n_channels} channels")
    if n_frames == 0:
        raise AudioFormatError("payload contains no samples")
    pcm = np.frombuffer(raw, dtype="<i2").astype(np.float64)
    if n_channels == 2:
        pcm = pcm.reshape(-1, 2).mean(axis=1)
    clipped = bool(np.any(np.abs(pcm) >= _PCM16_SCALE - 1))
    return AudioClip(samples=pcm / _PCM16_SCALE, sample_rate_hz=rate, clipped=clipped)


def resample(clip: AudioClip, target_hz: int) -> AudioClip:
    """Linear-interpolation resampling to target_hz.

    Output length is round(len * target/source).  Identical rates return the
    clip unchanged.
    """
    target_hz = int(target_hz)
    if target_hz <= 0:
        raise ValueError("target_hz must be positive")
    if target_hz == clip.sample_rate_hz:
        return clip
    n_in = len(clip)
    n_out = int(round(n_in * target_hz / clip.sample_rate_hz))
    if n_out < 1:
        raise ValueError("clip too short to resample to the requested rate")
    src_positions = np.arange(n_out) * (clip.sample_rate_hz / target_hz)
    samples = np.interp(src_positions, np.arange(n_in), clip.samples)
    return AudioClip(samples=samples, sample_rate_hz=target_hz, clipped=clip.clipped)
