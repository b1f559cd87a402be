"""Energy-based cough detection, phase segmentation, and the wet/dry
band-energy discriminator.

Thresholds are data-relative (median + k*MAD of the clip's own short-time
energy), so rescaling a clip's amplitude changes no decision made here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .audio import AudioClip
from .dsp import band_energy, next_power_of_two, periodogram
from .errors import PhaseMissingError

WET_BAND_HZ = (0.0, 750.0)
DRY_BAND_HZ = (1500.0, 2250.0)

# Guard against division by zero in the wet/dry band ratio.
RATIO_EPSILON = 1e-12

# Fine envelope resolution used for phase boundaries.
_ENVELOPE_FRAME_MS = 5.0
_ENVELOPE_HOP_MS = 2.5
_ENVELOPE_SMOOTH_FRAMES = 5

# Voiced-tail criteria: a trailing region at least this long whose ZCR stays
# low and whose envelope rebounds after the intermediate decay.
_VOICED_MIN_MS = 40.0
_VOICED_MAX_ZCR = 0.1
_VOICED_REBOUND_FRACTION = 0.2
_VOICED_REBOUND_OVER_MIN = 1.5

_PHASE1_DROP_FRACTION = 0.5


class CoughPattern(str, enum.Enum):
    THREE_PHASE = "three_phase"
    TWO_PHASE = "two_phase"
    PEAL = "peal"


class PhaseName(str, enum.Enum):
    EXPLOSIVE = "explosive"
    INTERMEDIATE = "intermediate"
    VOICED = "voiced"


@dataclass(frozen=True)
class PhaseBoundary:
    name: PhaseName
    start_sample: int
    end_sample: int


@dataclass(frozen=True)
class CoughSegment:
    """One detected cough: sample bounds, optional phase split, pattern tag."""

    start_sample: int
    end_sample: int
    peak_amplitude: float
    duration_ms: float
    phases: tuple[PhaseBoundary, ...] = ()
    pattern: CoughPattern | None = None
    from_split: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.start_sample < self.end_sample:
            raise ValueError("segment needs start < end")
        prev_end = self.start_sample
        for phase in self.phases:
            if phase.start_sample < prev_end or phase.end_sample > self.end_sample:
                raise ValueError("phases must be ordered, non-overlapping and contained")
            prev_end = phase.end_sample

    def phase(self, name: PhaseName) -> PhaseBoundary | None:
        for p in self.phases:
            if p.name == name:
                return p
        return None

    def to_dict(self, fs: int) -> dict:
        return {
            "start_ms": self.start_sample / fs * 1000.0,
            "end_ms": self.end_sample / fs * 1000.0,
            "pattern": self.pattern.value if self.pattern else None,
            "phases": [
                {
                    "name": p.name.value,
                    "start_ms": p.start_sample / fs * 1000.0,
                    "end_ms": p.end_sample / fs * 1000.0,
                }
                for p in self.phases
            ],
        }


@dataclass(frozen=True)
class DetectorConfig:
    analysis_window_ms: float = 50.0
    energy_threshold_k: float = 4.0
    min_duration_ms: float = 120.0
    max_duration_ms: float = 1000.0
    hysteresis_ratio: float = 0.5

    def __post_init__(self):
        if self.energy_threshold_k <= 0:
            raise ValueError("energy_threshold_k must be positive")
        if not self.min_duration_ms < self.max_duration_ms:
            raise ValueError("need min_duration_ms < max_duration_ms")


class WetDryLabel(str, enum.Enum):
    WET = "wet"
    DRY = "dry"


@dataclass(frozen=True)
class WetDryResult:
    label: WetDryLabel
    ratio: float
    confidence: float

    def to_dict(self) -> dict:
        return {"label": self.label.value, "ratio": self.ratio, "confidence": self.confidence}


def _short_time_energy(x: np.ndarray, window: int, hop: int) -> np.ndarray:
    if x.size < window:
        return np.empty(0)
    n = (x.size - window) // hop + 1
    idx = np.arange(window)[None, :] + hop * np.arange(n)[:, None]
    return np.sum(x[idx] ** 2, axis=1)


def _refine_bounds(x: np.ndarray, start: int, end: int, window: int,
                   onset_ms_level: float, offset_ms_level: float, fs: int) -> tuple[int, int]:
    """Tighten coarse window-grid bounds to ~5 ms resolution.

    The true onset lies inside the first analysis window and the true tail
    inside the last one; within those stretches the first/last fine frame
    whose mean square clears twice the corresponding threshold level marks
    the refined bound.  Thresholds stay data-relative, so amplitude scaling
    cannot move them.
    """
    frame = max(2, int(_ENVELOPE_FRAME_MS / 1000.0 * fs))
    hop = max(1, int(_ENVELOPE_HOP_MS / 1000.0 * fs))

    head = x[start : min(start + window, end)]
    if head.size >= frame:
        n = (head.size - frame) // hop + 1
        idx = np.arange(frame)[None, :] + hop * np.arange(n)[:, None]
        ms = np.mean(head[idx] ** 2, axis=1)
        hot = np.nonzero(ms > 2.0 * onset_ms_level)[0]
        if hot.size:
            start = start + int(hot[0]) * hop

    tail_lo = max(end - window, start)
    tail = x[tail_lo:end]
    if tail.size >= frame:
        n = (tail.size - frame) // hop + 1
        idx = np.arange(frame)[None, :] + hop * np.arange(n)[:, None]
        ms = np.mean(tail[idx] ** 2, axis=1)
        hot = np.nonzero(ms > 2.0 * offset_ms_level)[0]
        if hot.size:
            end = tail_lo + int(hot[-1]) * hop + frame
        else:
            end = tail_lo + frame
    return start, min(end, x.size)


def detect_coughs(clip: AudioClip, config: DetectorConfig = DetectorConfig()) -> list[CoughSegment]:
    """Locate cough events from the clip's short-time energy track.

    Onset fires when a window's energy exceeds median + k*MAD of the whole
    track; the segment stays open until energy falls to the hysteresis level
    (the same margin scaled by hysteresis_ratio, still above the noise
    median so segments close in steady background noise).  Too-short
    segments are dropped; over-long ones are split at their deepest internal
    energy valley and tagged as peal candidates.
    """
    fs = clip.sample_rate_hz
    window = int(config.analysis_window_ms / 1000.0 * fs)
    hop = max(1, window // 2)
    energy = _short_time_energy(clip.samples, window, hop)
    if energy.size == 0:
        return []

    median = float(np.median(energy))
    mad = float(np.median(np.abs(energy - median)))
    onset_th = median + config.energy_threshold_k * mad
    offset_th = median + config.hysteresis_ratio * config.energy_threshold_k * mad

    spans: list[tuple[int, int]] = []  # inclusive window index ranges
    open_start = None
    for i, e in enumerate(energy):
        if open_start is None:
            if e > onset_th:
                open_start = i
        elif e <= offset_th:
            spans.append((open_start, i - 1))
            open_start = None
    if open_start is not None:
        spans.append((open_start, energy.size - 1))

    min_samples = int(config.min_duration_ms / 1000.0 * fs)
    max_samples = int(config.max_duration_ms / 1000.0 * fs)

    onset_ms_level = onset_th / window
    offset_ms_level = offset_th / window
    segments: list[CoughSegment] = []
    for w_start, w_end in spans:
        start = w_start * hop
        end = min(w_end * hop + window, clip.samples.size)
        start, end = _refine_bounds(
            clip.samples, start, end, window, onset_ms_level, offset_ms_level, fs
        )
        if end - start < 2:
            continue
        for s, e, split_born in _split_overlong(energy, hop, window, start, end, max_samples):
            if e - s < min_samples:
                continue
            chunk = clip.samples[s:e]
            segments.append(
                CoughSegment(
                    start_sample=s,
                    end_sample=e,
                    peak_amplitude=float(np.max(np.abs(chunk))),
                    duration_ms=(e - s) / fs * 1000.0,
                    from_split=split_born,
                    pattern=CoughPattern.PEAL if split_born else None,
                )
            )
    return segments


def _split_overlong(energy, hop, window, start, end, max_samples, split_born=False):
    """Recursively split [start, end) at the deepest interior energy valley."""
    if end - start <= max_samples:
        return [(start, end, split_born)]
    w_lo = start // hop + 1
    w_hi = max(w_lo + 1, (end - window) // hop)
    if w_hi - w_lo < 1:
        return [(start, end, split_born)]
    interior = energy[w_lo:w_hi]
    valley = int(np.argmin(interior)) + w_lo
    split_at = valley * hop + window // 2
    if split_at <= start or split_at >= end:
        return [(start, end, split_born)]
    return _split_overlong(energy, hop, window, start, split_at, max_samples, True) + \
        _split_overlong(energy, hop, window, split_at, end, max_samples, True)


def _rms_envelope(x: np.ndarray, fs: int) -> tuple[np.ndarray, int, int]:
    frame = max(2, int(_ENVELOPE_FRAME_MS / 1000.0 * fs))
    hop = max(1, int(_ENVELOPE_HOP_MS / 1000.0 * fs))
    if x.size < frame:
        return np.array([np.sqrt(np.mean(x**2))]), x.size, x.size
    n = (x.size - frame) // hop + 1
    idx = np.arange(frame)[None, :] + hop * np.arange(n)[:, None]
    rms = np.sqrt(np.mean(x[idx] ** 2, axis=1))
    k = min(_ENVELOPE_SMOOTH_FRAMES, rms.size)
    smoothed = np.convolve(rms, np.ones(k) / k, mode="same")
    return smoothed, frame, hop


def segment_phases(clip: AudioClip, segment: CoughSegment) -> CoughSegment:
    """Fill in phase boundaries for a detected segment.

    The explosive phase runs from onset to the first point where the
    smoothed envelope drops below half the segment peak; an intermediate
    decaying phase follows; a voiced tail is added when a sufficiently long
    low-ZCR region rebounds after the decay.
    """
    if segment.start_sample < 0 or segment.end_sample > clip.samples.size:
        raise ValueError("segment lies outside the clip")
    fs = clip.sample_rate_hz
    x = clip.samples[segment.start_sample : segment.end_sample]
    envelope, env_frame, env_hop = _rms_envelope(x, fs)

    peak_idx = int(np.argmax(envelope))
    peak = float(envelope[peak_idx])
    if peak == 0.0:
        phases = (PhaseBoundary(PhaseName.EXPLOSIVE, segment.start_sample, segment.end_sample),)
        return replace(segment, phases=phases,
                       pattern=segment.pattern or CoughPattern.TWO_PHASE)

    below = np.nonzero(envelope[peak_idx + 1 :] < _PHASE1_DROP_FRACTION * peak)[0]
    if below.size == 0:
        phases = (PhaseBoundary(PhaseName.EXPLOSIVE, segment.start_sample, segment.end_sample),)
        pattern = CoughPattern.PEAL if segment.from_split else CoughPattern.TWO_PHASE
        return replace(segment, phases=phases, pattern=pattern)
    p1_end_idx = peak_idx + 1 + int(below[0])
    p1_end = segment.start_sample + p1_end_idx * env_hop

    voiced_start = None
    if not segment.from_split:
        voiced_start = _find_voiced_tail(x, envelope, p1_end_idx, env_hop, peak, fs)

    phases = [PhaseBoundary(PhaseName.EXPLOSIVE, segment.start_sample, p1_end)]
    if voiced_start is not None:
        v_sample = segment.start_sample + voiced_start
        phases.append(PhaseBoundary(PhaseName.INTERMEDIATE, p1_end, v_sample))
        phases.append(PhaseBoundary(PhaseName.VOICED, v_sample, segment.end_sample))
        pattern = CoughPattern.THREE_PHASE
    else:
        phases.append(PhaseBoundary(PhaseName.INTERMEDIATE, p1_end, segment.end_sample))
        pattern = CoughPattern.PEAL if segment.from_split else CoughPattern.TWO_PHASE
    return replace(segment, phases=tuple(phases), pattern=pattern)


def _find_voiced_tail(x, envelope, p1_end_idx, env_hop, peak, fs):
    """Offset (in samples, relative to segment start) of a voiced tail, or
    None when the decay never rebounds into a long low-ZCR region."""
    tail = envelope[p1_end_idx:]
    if tail.size == 0:
        return None
    running_min = np.minimum.accumulate(tail)
    rebound = (tail >= _VOICED_REBOUND_FRACTION * peak) & (
        tail >= _VOICED_REBOUND_OVER_MIN * running_min
    )
    min_len = int(_VOICED_MIN_MS / 1000.0 * fs)
    for i in np.nonzero(rebound)[0]:
        offset = (p1_end_idx + int(i)) * env_hop
        region = x[offset:]
        if region.size < max(min_len, 2):
            return None
        signs = np.where(region >= 0, 1, -1)
        region_zcr = np.count_nonzero(np.diff(signs)) / (region.size - 1)
        if region_zcr < _VOICED_MAX_ZCR:
            return offset
    return None


def classify_wet_dry(clip: AudioClip, segment: CoughSegment, threshold: float = 1.0) -> WetDryResult:
    """Wet/dry call from the intermediate phase's band-energy ratio.

    ratio = E[0, 750) / (E[1500, 2250) + eps) over phase 2 only; wet when
    the ratio exceeds the threshold.  Confidence squashes |log(ratio/th)|
    into [0, 1].
    """
    phase2 = segment.phase(PhaseName.INTERMEDIATE)
    if phase2 is None:
        raise PhaseMissingError("segment has no intermediate phase; run segment_phases first")
    x = clip.samples[phase2.start_sample : phase2.end_sample]
    if x.size < 2:
        raise PhaseMissingError("intermediate phase is empty")
    nfft = next_power_of_two(x.size)
    spectrum = periodogram(x, nfft, clip.sample_rate_hz)
    low = band_energy(spectrum, *WET_BAND_HZ)
    high = band_energy(spectrum, *DRY_BAND_HZ)
    ratio = low / (high + RATIO_EPSILON)
    label = WetDryLabel.WET if ratio > threshold else WetDryLabel.DRY
    if ratio <= 0.0:
        confidence = 1.0
    else:
        c = abs(float(np.log(ratio / threshold)))
        confidence = c / (1.0 + c)
    return WetDryResult(label=label, ratio=float(ratio), confidence=confidence)
