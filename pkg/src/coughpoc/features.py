"""Per-cough feature vectors, sensor fusion, normalization, Fisher ranking,
and labelled dataset management.

The acoustic vector holds 35 values in a fixed, documented order; fusing a
sensor record appends three values plus a presence mask for 41 total.  The
classifier consumes the fused layout, so the order here is a contract.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioClip
from .detect import CoughPattern, CoughSegment, PhaseName, RATIO_EPSILON, WET_BAND_HZ, DRY_BAND_HZ
from .dsp import (
    FrameSpec,
    MfccConfig,
    band_energy,
    frame_signal,
    frame_signal_raw,
    mfcc,
    next_power_of_two,
    periodogram,
    shannon_entropy,
    zcr_rows,
)
from .errors import (
    InsufficientDataError,
    PhaseMissingError,
    SegmentTooShortError,
    StratificationError,
)

N_MFCC = 12

FEATURE_NAMES = (
    tuple(f"mfcc_mean_{i + 1}" for i in range(N_MFCC))
    + tuple(f"mfcc_std_{i + 1}" for i in range(N_MFCC))
    + ("zcr_mean", "zcr_std", "entropy_mean", "entropy_std")
    + ("phase2_low_energy", "phase2_high_energy", "wet_dry_ratio")
    + ("duration_ms", "peak_amplitude")
    + ("pattern_two_phase", "pattern_three_phase")
)
N_FEATURES = len(FEATURE_NAMES)  # 35

SENSOR_NAMES = ("temp_c", "airflow_peak_lps", "airflow_volume_l")
MASK_NAMES = tuple(f"has_{name}" for name in SENSOR_NAMES)
FUSED_NAMES = FEATURE_NAMES + SENSOR_NAMES + MASK_NAMES
N_FUSED = len(FUSED_NAMES)  # 41

TEMP_RANGE_C = (30.0, 45.0)


@dataclass(frozen=True)
class FeatureVector:
    """35 acoustic statistics for one cough, ordered as FEATURE_NAMES."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} features, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __getitem__(self, name: str) -> float:
        return float(self.values[FEATURE_NAMES.index(name)])


@dataclass(frozen=True)
class SensorRecord:
    """Optional point-of-care sensor readings attached to a clip."""

    temp_c: float | None = None
    airflow_peak_lps: float | None = None
    airflow_volume_l: float | None = None

    def __post_init__(self):
        if self.temp_c is not None and not TEMP_RANGE_C[0] <= self.temp_c <= TEMP_RANGE_C[1]:
            raise ValueError(f"temp_c={self.temp_c} outside plausible range {TEMP_RANGE_C}")
        for name in ("airflow_peak_lps", "airflow_volume_l"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def from_dict(cls, data: dict) -> "SensorRecord":
        return cls(
            temp_c=data.get("temp_c"),
            airflow_peak_lps=data.get("airflow_peak_lps"),
            airflow_volume_l=data.get("airflow_volume_l"),
        )

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in SENSOR_NAMES}


@dataclass(frozen=True)
class FusedVector:
    """FeatureVector plus imputed sensor slots and their presence mask."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (N_FUSED,):
            raise ValueError(f"expected {N_FUSED} fused values, got {values.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def extract_features(clip: AudioClip, segment: CoughSegment,
                     config: MfccConfig = MfccConfig()) -> FeatureVector:
    """Acoustic statistics over one phased cough segment.

    MFCC columns are summarised by mean/std over the segment's frames, ZCR
    and spectral entropy are computed per frame then summarised, and the
    band energies come from the intermediate phase (zero when a peal-edge
    segment carries no intermediate phase).
    """
    if not segment.phases:
        raise PhaseMissingError("segment has no phases; run segment_phases first")
    sub = AudioClip(
        samples=clip.samples[segment.start_sample : segment.end_sample].copy(),
        sample_rate_hz=clip.sample_rate_hz,
    )
    frame_len = config.frame_spec.frame_len(clip.sample_rate_hz)
    if len(sub) < frame_len:
        raise SegmentTooShortError(
            f"segment of {len(sub)} samples is shorter than one {frame_len}-sample frame"
        )

    coeffs = mfcc(sub, config)
    mfcc_mean = coeffs.mean(axis=0)
    mfcc_std = coeffs.std(axis=0)

    raw_frames = frame_signal_raw(sub, config.frame_spec)
    rates = zcr_rows(raw_frames)

    windowed = frame_signal(sub, config.frame_spec)
    nfft = config.frame_spec.fft_size(clip.sample_rate_hz)
    entropies = []
    for frame in windowed:
        spectrum = periodogram(frame, nfft, clip.sample_rate_hz)
        if spectrum.total_energy() > 0:
            entropies.append(shannon_entropy(spectrum))
    entropies = np.asarray(entropies) if entropies else np.zeros(1)

    phase2 = segment.phase(PhaseName.INTERMEDIATE)
    if phase2 is not None and phase2.end_sample - phase2.start_sample >= 2:
        x2 = clip.samples[phase2.start_sample : phase2.end_sample]
        spectrum2 = periodogram(x2, next_power_of_two(x2.size), clip.sample_rate_hz)
        low = band_energy(spectrum2, *WET_BAND_HZ)
        high = band_energy(spectrum2, *DRY_BAND_HZ)
        ratio = low / (high + RATIO_EPSILON)
    else:
        low = high = ratio = 0.0

    pattern_flags = (
        1.0 if segment.pattern == CoughPattern.TWO_PHASE else 0.0,
        1.0 if segment.pattern == CoughPattern.THREE_PHASE else 0.0,
    )
    values = np.concatenate(
        [
            mfcc_mean,
            mfcc_std,
            [rates.mean(), rates.std(), entropies.mean(), entropies.std()],
            [low, high, ratio],
            [segment.duration_ms, segment.peak_amplitude],
            pattern_flags,
        ]
    )
    return FeatureVector(values=values)


def fuse(fv: FeatureVector, sensor: SensorRecord) -> FusedVector:
    """Concatenate sensor slots (missing values imputed to 0 with mask 0)."""
    slots, mask = [], []
    for name in SENSOR_NAMES:
        value = getattr(sensor, name)
        slots.append(0.0 if value is None else float(value))
        mask.append(0.0 if value is None else 1.0)
    return FusedVector(values=np.concatenate([fv.values, slots, mask]))


@dataclass(frozen=True)
class Normalizer:
    """Per-feature z-score parameters fitted on training rows only."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean and std must be matching 1-D arrays")
        if np.any(std <= 0):
            raise ValueError("std components must be positive")
        mean.flags.writeable = False
        std.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


def fit_normalizer(rows: np.ndarray) -> Normalizer:
    """Population-std z-score fit; zero-variance columns pass through."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise InsufficientDataError("normalizer needs a matrix with at least 2 rows")
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return Normalizer(mean=mean, std=std)


def apply_normalizer(norm: Normalizer, rows: np.ndarray) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    return (rows - norm.mean) / norm.std


def fisher_score(rows: np.ndarray, labels) -> np.ndarray:
    """Between-class over within-class variance per feature column.

    F_j = sum_c n_c (mu_cj - mu_j)^2 / sum_c n_c var_cj, with the per-class
    variance floored at 1e-12.  Higher scores mark more discriminative
    features.
    """
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels)
    if rows.ndim != 2 or rows.shape[0] != labels.shape[0]:
        raise ValueError("rows and labels must align")
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("fisher_score needs at least 2 classes")
    counts = {c: int(np.sum(labels == c)) for c in classes}
    if min(counts.values()) < 2:
        raise ValueError("fisher_score needs at least 2 rows per class")
    overall = rows.mean(axis=0)
    between = np.zeros(rows.shape[1])
    within = np.zeros(rows.shape[1])
    for c in classes:
        members = rows[labels == c]
        n_c = members.shape[0]
        between += n_c * (members.mean(axis=0) - overall) ** 2
        within += n_c * np.maximum(members.var(axis=0), 1e-12)
    return between / within


def select_top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest scores, ascending; ties go to lower index."""
    scores = np.asarray(scores, dtype=np.float64)
    if not 1 <= k <= scores.size:
        raise ValueError(f"k must lie in [1, {scores.size}]")
    order = np.lexsort((np.arange(scores.size), -scores))
    return np.sort(order[:k])


@dataclass(frozen=True)
class ManifestEntry:
    """One labelled clip: anonymized id, wav path, class, sensor readings."""

    id: str
    wav: str
    label: str
    sensor: SensorRecord

    def to_dict(self) -> dict:
        return {"id": self.id, "wav": self.wav, "label": self.label, **self.sensor.to_dict()}


def load_manifest(path) -> list[ManifestEntry]:
    """Parse a JSON Lines manifest; malformed lines are reported by number."""
    entries = []
    seen = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
                entry = ManifestEntry(
                    id=str(data["id"]),
                    wav=str(data["wav"]),
                    label=str(data["label"]),
                    sensor=SensorRecord.from_dict(data),
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from exc
            if entry.id in seen:
                raise ValueError(f"{path}: line {lineno}: duplicate id {entry.id!r}")
            seen.add(entry.id)
            entries.append(entry)
    return entries


def save_manifest(entries, path) -> None:
    with open(path, "w") as fh:
        for entry in entries:
            fh.write(json.dumps(entry.to_dict()) + "\n")


def split_dataset(entries, train_fraction: float = 0.8, seed: int = 0):
    """Deterministic stratified split into (train, test) lists."""
    if not 0.5 <= train_fraction < 1.0:
        raise ValueError("train_fraction must lie in [0.5, 1)")
    by_label: dict[str, list] = {}
    for entry in entries:
        by_label.setdefault(entry.label, []).append(entry)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label in sorted(by_label):
        members = by_label[label]
        if len(members) < 2:
            raise StratificationError(f"class {label!r} has fewer than 2 examples")
        order = rng.permutation(len(members))
        n_train = int(round(train_fraction * len(members)))
        n_train = min(max(n_train, 1), len(members) - 1)
        train.extend(members[i] for i in order[:n_train])
        test.extend(members[i] for i in order[n_train:])
    return train, test


def collect_fused_rows(entries, base_dir, detector_config=None, mfcc_config=MfccConfig()):
    """Run the cough pipeline over manifest entries and stack fused rows.

    Returns (matrix, labels, clip_ids); every detected cough contributes one
    row labelled with its clip's class.  Clips with no detected cough are
    skipped.
    """
    from .audio import CANONICAL_RATE_HZ, load_wav, resample
    from .detect import DetectorConfig, detect_coughs, segment_phases

    detector_config = detector_config or DetectorConfig()
    base = Path(base_dir)
    rows, labels, clip_ids = [], [], []
    for entry in entries:
        clip = resample(load_wav(base / entry.wav), CANONICAL_RATE_HZ)
        for segment in detect_coughs(clip, detector_config):
            try:
                phased = segment_phases(clip, segment)
                fv = extract_features(clip, phased, mfcc_config)
            except (SegmentTooShortError, PhaseMissingError):
                continue
            rows.append(fuse(fv, entry.sensor).values)
            labels.append(entry.label)
            clip_ids.append(entry.id)
    matrix = np.vstack(rows) if rows else np.empty((0, N_FUSED))
    return matrix, np.asarray(labels), clip_ids


def write_feature_csv(matrix: np.ndarray, path, names=FUSED_NAMES) -> None:
    """Feature matrix as CSV with a header naming every column."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if matrix.shape[1] != len(names):
        raise ValueError(f"matrix has {matrix.shape[1]} columns, expected {len(names)}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        writer.writerows(matrix.tolist())
