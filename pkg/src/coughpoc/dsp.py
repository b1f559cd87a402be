"""Spectral mathematics: framing, periodogram, mel filterbank, MFCC and
friends.

All functions are pure: identical inputs give bit-identical outputs, and
nothing here keeps state between calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct

from .audio import AudioClip
from .errors import EntropyUndefinedError

# Mel scale constants: mel = MEL_SCALE * ln(1 + hz / MEL_CORNER_HZ).
MEL_SCALE = 1125.0
MEL_CORNER_HZ = 700.0

# Filterbank energies are floored here before the log so silence stays finite.
LOG_ENERGY_FLOOR = 1e-10

DEFAULT_N_FILTERS = 26


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


@dataclass(frozen=True)
class FrameSpec:
    """Analysis framing: frame/hop lengths in ms, window type, FFT size.

    nfft=None picks the smallest power of two that holds one frame.
    """

    frame_len_ms: float = 25.0
    hop_len_ms: float = 10.0
    window: str = "hann"
    nfft: int | None = None

    def __post_init__(self):
        if not 20.0 <= self.frame_len_ms <= 40.0:
            raise ValueError("frame_len_ms must lie in [20, 40] ms")
        if self.hop_len_ms <= 0:
            raise ValueError("hop_len_ms must be positive")
        if self.window not in ("rectangular", "hann"):
            raise ValueError(f"unknown window {self.window!r}")
        if self.nfft is not None and not _is_power_of_two(self.nfft):
            raise ValueError("nfft must be a power of two")

    def frame_len(self, fs: int) -> int:
        return int(self.frame_len_ms / 1000.0 * fs)

    def hop_len(self, fs: int) -> int:
        return int(self.hop_len_ms / 1000.0 * fs)

    def fft_size(self, fs: int) -> int:
        n = self.frame_len(fs)
        if self.nfft is None:
            return next_power_of_two(n)
        if self.nfft < n:
            raise ValueError(f"nfft={self.nfft} is smaller than the {n}-sample frame")
        return self.nfft

    def window_values(self, fs: int) -> np.ndarray:
        n = self.frame_len(fs)
        if self.window == "hann":
            return np.hanning(n)
        return np.ones(n)


@dataclass(frozen=True)
class PowerSpectrum:
    """One-sided power spectrum: nfft/2+1 non-negative bins, bin k centred
    at k * bin_width_hz."""

    bins: np.ndarray
    bin_width_hz: float

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.float64)
        if bins.ndim != 1 or bins.size < 2:
            raise ValueError("PowerSpectrum needs a 1-D bin array")
        if np.any(bins < 0):
            raise ValueError("power bins must be non-negative")
        bins.flags.writeable = False
        object.__setattr__(self, "bins", bins)

    @property
    def nyquist_hz(self) -> float:
        return (self.bins.size - 1) * self.bin_width_hz

    def total_energy(self) -> float:
        return float(self.bins.sum())


@dataclass(frozen=True)
class MelFilterBank:
    """Triangular mel filters as an (n_filters, nfft/2+1) weight matrix."""

    filters: np.ndarray
    f_min_hz: float
    f_max_hz: float
    breakpoints_hz: np.ndarray = field(repr=False, default=None)

    @property
    def n_filters(self) -> int:
        return self.filters.shape[0]


@dataclass(frozen=True)
class MfccConfig:
    """Cepstral extraction settings; kept coefficient indices are 1-based, so
    the defaults drop the overall-energy coefficient and keep twelve."""

    frame_spec: FrameSpec = FrameSpec()
    n_filters: int = DEFAULT_N_FILTERS
    keep_lo: int = 2
    keep_hi: int = 13
    f_min_hz: float = 0.0
    f_max_hz: float | None = None

    def __post_init__(self):
        if not 1 <= self.keep_lo <= self.keep_hi <= self.n_filters:
            raise ValueError("need 1 <= keep_lo <= keep_hi <= n_filters")

    @property
    def n_coefficients(self) -> int:
        return self.keep_hi - self.keep_lo + 1


def frame_signal(clip: AudioClip, spec: FrameSpec) -> np.ndarray:
    """Slice a clip into windowed frames, shape (n_frames, frame_len).

    A trailing partial frame is dropped; a clip shorter than one frame gives
    an empty (0, frame_len) array.
    """
    fs = clip.sample_rate_hz
    frame_len = spec.frame_len(fs)
    hop = spec.hop_len(fs)
    x = clip.samples
    if x.size < frame_len:
        return np.empty((0, frame_len))
    n_frames = (x.size - frame_len) // hop + 1
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return x[idx] * spec.window_values(fs)[None, :]


def frame_signal_raw(clip: AudioClip, spec: FrameSpec) -> np.ndarray:
    """Same slicing as frame_signal but without the analysis window (for
    time-domain statistics such as ZCR)."""
    raw_spec = FrameSpec(spec.frame_len_ms, spec.hop_len_ms, "rectangular", spec.nfft)
    return frame_signal(clip, raw_spec)


def periodogram(frame: np.ndarray, nfft: int, sample_rate_hz: int) -> PowerSpectrum:
    """Power spectrum estimate of one frame: |DFT_k|^2 / nfft, k = 0..nfft/2.

    The frame is zero-padded to nfft, which must be a power of two at least
    as long as the frame.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if not _is_power_of_two(nfft):
        raise ValueError("nfft must be a power of two")
    if nfft < frame.size:
        raise ValueError(f"nfft={nfft} is smaller than the {frame.size}-sample frame")
    spectrum = np.fft.rfft(frame, n=nfft)
    bins = (spectrum.real**2 + spectrum.imag**2) / nfft
    return PowerSpectrum(bins=bins, bin_width_hz=sample_rate_hz / nfft)


def _periodogram_rows(frames: np.ndarray, nfft: int) -> np.ndarray:
    """Vectorized |DFT|^2/nfft over frame rows."""
    spectra = np.fft.rfft(frames, n=nfft, axis=1)
    return (spectra.real**2 + spectra.imag**2) / nfft


def hz_to_mel(f):
    """Perceptual mel value of a frequency in Hz."""
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    out = MEL_SCALE * np.log1p(f / MEL_CORNER_HZ)
    return float(out) if out.ndim == 0 else out


def mel_to_hz(m):
    """Inverse of hz_to_mel."""
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise ValueError("mel value must be non-negative")
    out = MEL_CORNER_HZ * np.expm1(m / MEL_SCALE)
    return float(out) if out.ndim == 0 else out


def build_mel_filterbank(
    n_filters: int,
    nfft: int,
    fs: int,
    f_min: float = 0.0,
    f_max: float | None = None,
) -> MelFilterBank:
    """Triangular filterbank with centres equally spaced on the mel axis.

    n_filters+2 breakpoints span [mel(f_min), mel(f_max)]; each filter is a
    unit-peak triangle over three consecutive breakpoints snapped to the
    nearest FFT bin.
    """
    if f_max is None:
        f_max = fs / 2
    if n_filters < 2:
        raise ValueError("need at least 2 filters")
    if f_max > fs / 2:
        raise ValueError(f"f_max={f_max} exceeds the Nyquist frequency {fs / 2}")
    if not f_min < f_max:
        raise ValueError("need f_min < f_max")

    mel_points = np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_filters + 2)
    hz_points = mel_to_hz(mel_points)
    bin_points = np.rint(hz_points * nfft / fs).astype(int)

    n_bins = nfft // 2 + 1
    filters = np.zeros((n_filters, n_bins))
    for i in range(1, n_filters + 1):
        left, centre, right = bin_points[i - 1], bin_points[i], bin_points[i + 1]
        for k in range(left, centre):
            filters[i - 1, k] = (k - left) / (centre - left)
        for k in range(centre, right):
            filters[i - 1, k] = (right - k) / (right - centre)
        # Degenerate (all-equal) breakpoints still get their unit peak.
        filters[i - 1, centre] = 1.0
    filters.flags.writeable = False
    return MelFilterBank(
        filters=filters, f_min_hz=float(f_min), f_max_hz=float(f_max),
        breakpoints_hz=hz_points,
    )


def _log_filterbank_energies(clip: AudioClip, spec: FrameSpec, n_filters: int,
                             f_min: float = 0.0, f_max: float | None = None) -> np.ndarray:
    frames = frame_signal(clip, spec)
    if frames.shape[0] == 0:
        return np.empty((0, n_filters))
    nfft = spec.fft_size(clip.sample_rate_hz)
    power = _periodogram_rows(frames, nfft)
    bank = build_mel_filterbank(n_filters, nfft, clip.sample_rate_hz, f_min, f_max)
    energies = power @ bank.filters.T
    return np.log(np.maximum(energies, LOG_ENERGY_FLOOR))


def mfcc(clip: AudioClip, config: MfccConfig = MfccConfig()) -> np.ndarray:
    """Mel-frequency cepstral coefficients, one row per frame.

    Per frame: periodogram -> mel filterbank energies -> natural log
    (floored) -> orthonormal DCT-II -> keep coefficients keep_lo..keep_hi.
    """
    log_energies = _log_filterbank_energies(
        clip, config.frame_spec, config.n_filters, config.f_min_hz, config.f_max_hz
    )
    if log_energies.shape[0] == 0:
        return np.empty((0, config.n_coefficients))
    cepstra = dct(log_energies, type=2, norm="ortho", axis=1)
    return cepstra[:, config.keep_lo - 1 : config.keep_hi]


def log_mel_spectrogram(
    clip: AudioClip, spec: FrameSpec, n_filters: int = DEFAULT_N_FILTERS
) -> np.ndarray:
    """Log mel filterbank energies without the DCT, shape (frames, filters).

    The convolutional classifier feeds this with hop = frame length
    (non-overlapping frames); any FrameSpec is accepted though, and with the
    same spec this equals the intermediate mfcc stage.
    """
    return _log_filterbank_energies(clip, spec, n_filters)


def zcr(frame: np.ndarray) -> float:
    """Zero-crossing rate: sign changes over len-1 sample pairs, in [0, 1].

    Zero samples count as positive.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.size < 2:
        raise ValueError("zcr needs at least 2 samples")
    signs = np.where(frame >= 0, 1, -1)
    return float(np.count_nonzero(np.diff(signs)) / (frame.size - 1))


def zcr_rows(frames: np.ndarray) -> np.ndarray:
    """zcr applied to each row of a frame matrix."""
    if frames.shape[1] < 2:
        raise ValueError("zcr needs at least 2 samples per frame")
    signs = np.where(frames >= 0, 1, -1)
    return np.count_nonzero(np.diff(signs, axis=1), axis=1) / (frames.shape[1] - 1)


def shannon_entropy(spectrum: PowerSpectrum) -> float:
    """Entropy in bits of the normalized power spectrum; 0*log0 counts as 0."""
    total = spectrum.total_energy()
    if total <= 0:
        raise EntropyUndefinedError("entropy of an all-zero spectrum is undefined")
    p = spectrum.bins / total
    nonzero = p > 0
    return float(-(p[nonzero] * np.log2(p[nonzero])).sum())


def band_energy(spectrum: PowerSpectrum, f_lo: float, f_hi: float) -> float:
    """Total power in bins whose centre frequency falls in [f_lo, f_hi).

    The band is half-open so adjacent bands tile without double counting;
    when f_hi reaches Nyquist the top bin is included so a set of bands can
    cover the whole spectrum.
    """
    if f_lo < 0 or not f_lo < f_hi:
        raise ValueError("need 0 <= f_lo < f_hi")
    nyquist = spectrum.nyquist_hz
    if f_hi > nyquist * (1 + 1e-12):
        raise ValueError(f"f_hi={f_hi} exceeds the Nyquist frequency {nyquist}")
    centres = np.arange(spectrum.bins.size) * spectrum.bin_width_hz
    mask = (centres >= f_lo) & (centres < f_hi)
    if f_hi >= nyquist * (1 - 1e-12):
        mask |= centres >= nyquist * (1 - 1e-12)
    return float(spectrum.bins[mask].sum())
