"""Parametric generator of labelled synthetic cough clips and sensor records.

Clips follow the three-phase cough anatomy: a broadband explosive burst, an
exponentially decaying band-limited intermediate phase (low band when wet,
high band when dry), and an optional damped-sinusoid voiced tail.  All
constants beyond the phase durations and spectral bands are corpus
conventions, not clinical claims; see the README written next to each
generated corpus.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import CANONICAL_RATE_HZ, AudioClip, save_wav
from .errors import SynthesisParameterError

# Spectral bands for the intermediate phase (Hz).  The wet band starts at
# 20 Hz rather than DC so the noise has no offset; its energy still falls
# inside the 0-750 Hz measurement band.
WET_NOISE_BAND = (20.0, 750.0)
DRY_NOISE_BAND = (1500.0, 2250.0)

# RMS envelope plan relative to the burst onset (the explosive phase is the
# loudest; the voiced tail rebounds above the decayed intermediate phase).
_PHASE1_END_LEVEL = 0.5
_PHASE2_START_LEVEL = 0.45
_PHASE3_RMS_LEVEL = 0.3
_PHASE3_DECAY = 2.2
_ATTACK_MS = 2.5

PHASE1_RANGE_MS = (30.0, 80.0)
PHASE2_RANGE_MS = (100.0, 300.0)
PHASE3_RANGE_MS = (40.0, 120.0)
F0_RANGE_HZ = (150.0, 300.0)
MAX_TOTAL_MS = 1000.0


@dataclass(frozen=True)
class CoughSynthesisParams:
    phase1_ms: float = 50.0
    phase2_ms: float = 200.0
    phase3: bool = False
    phase3_ms: float = 80.0
    f0_hz: float = 200.0
    wet: bool = False
    peak_amplitude: float = 0.8
    decay: float = 1.5  # log attenuation of the envelope across phase 2

    def __post_init__(self):
        if not PHASE1_RANGE_MS[0] <= self.phase1_ms <= PHASE1_RANGE_MS[1]:
            raise SynthesisParameterError(f"phase1_ms out of range {PHASE1_RANGE_MS}")
        if not PHASE2_RANGE_MS[0] <= self.phase2_ms <= PHASE2_RANGE_MS[1]:
            raise SynthesisParameterError(f"phase2_ms out of range {PHASE2_RANGE_MS}")
        if self.phase3:
            if not PHASE3_RANGE_MS[0] <= self.phase3_ms <= PHASE3_RANGE_MS[1]:
                raise SynthesisParameterError(f"phase3_ms out of range {PHASE3_RANGE_MS}")
            if not F0_RANGE_HZ[0] <= self.f0_hz <= F0_RANGE_HZ[1]:
                raise SynthesisParameterError(f"f0_hz out of range {F0_RANGE_HZ}")
        if self.total_ms > MAX_TOTAL_MS:
            raise SynthesisParameterError("total duration exceeds 1000 ms")
        if not 0 < self.peak_amplitude <= 1.0:
            raise SynthesisParameterError("peak_amplitude must lie in (0, 1]")
        if self.decay <= 0:
            raise SynthesisParameterError("decay must be positive")

    @property
    def total_ms(self) -> float:
        return self.phase1_ms + self.phase2_ms + (self.phase3_ms if self.phase3 else 0.0)


@dataclass(frozen=True)
class NormalClipped:
    """Gaussian sampler clipped to [lo, hi]."""

    mean: float
    std: float
    lo: float
    hi: float

    def sample(self, rng: np.random.Generator) -> float:
        return float(np.clip(rng.normal(self.mean, self.std), self.lo, self.hi))


@dataclass(frozen=True)
class ClassProfile:
    """Sampling profile for one illness class."""

    name: str
    wet_probability: float
    temp_c: NormalClipped | None
    airflow_peak_lps: NormalClipped | None
    airflow_volume_l: NormalClipped | None
    cough_count: tuple[int, int] = (1, 3)
    phase3_probability: float = 0.35
    sensor_missing_probability: float = 0.08

    def __post_init__(self):
        if not 0.0 <= self.wet_probability <= 1.0:
            raise ValueError("wet_probability must lie in [0, 1]")
        if not 0.0 <= self.phase3_probability <= 1.0:
            raise ValueError("phase3_probability must lie in [0, 1]")


DEFAULT_PROFILES = (
    ClassProfile(
        name="covid_like",
        wet_probability=0.1,
        temp_c=NormalClipped(39.0, 0.4, 38.0, 40.5),
        airflow_peak_lps=NormalClipped(2.5, 0.4, 1.2, 3.8),
        airflow_volume_l=NormalClipped(2.3, 0.4, 1.0, 3.6),
        cough_count=(1, 3),
        phase3_probability=0.3,
        sensor_missing_probability=0.03,
    ),
    ClassProfile(
        name="flu_like",
        wet_probability=0.65,
        temp_c=NormalClipped(38.1, 0.4, 37.3, 39.5),
        airflow_peak_lps=NormalClipped(4.7, 0.5, 3.0, 6.4),
        airflow_volume_l=NormalClipped(3.7, 0.45, 2.4, 5.2),
        cough_count=(1, 3),
        phase3_probability=0.4,
        sensor_missing_probability=0.03,
    ),
    ClassProfile(
        name="healthy",
        wet_probability=0.5,
        temp_c=NormalClipped(36.7, 0.25, 36.0, 37.4),
        airflow_peak_lps=NormalClipped(6.7, 0.55, 5.2, 8.8),
        airflow_volume_l=NormalClipped(5.0, 0.45, 3.6, 6.8),
        cough_count=(1, 2),
        phase3_probability=0.35,
        sensor_missing_probability=0.03,
    ),
)


def _band_noise(n: int, band: tuple[float, float], fs: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-RMS white noise brick-wall filtered to the given band."""
    white = rng.normal(size=n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    mask = (freqs >= band[0]) & (freqs < band[1])
    shaped = np.fft.irfft(spectrum * mask, n=n)
    rms = np.sqrt(np.mean(shaped**2))
    return shaped / rms if rms > 0 else shaped


def _attack_ramp(n: int, fs: int) -> np.ndarray:
    ramp = np.ones(n)
    k = min(n, max(1, int(_ATTACK_MS / 1000.0 * fs)))
    ramp[:k] = np.linspace(0.0, 1.0, k, endpoint=False) + 1.0 / k
    return ramp


def synth_cough(
    params: CoughSynthesisParams,
    fs: int = CANONICAL_RATE_HZ,
    rng: np.random.Generator | int | None = None,
):
    """Render one cough; returns (samples, truth) where truth carries the
    exact phase boundaries, pattern, and wet flag."""
    if rng is None or isinstance(rng, int):
        rng = np.random.default_rng(rng)
    n1 = int(params.phase1_ms / 1000.0 * fs)
    n2 = int(params.phase2_ms / 1000.0 * fs)
    n3 = int(params.phase3_ms / 1000.0 * fs) if params.phase3 else 0

    # Explosive burst: broadband unit-RMS noise decaying to the hand-over level.
    burst = rng.normal(size=n1)
    burst /= np.sqrt(np.mean(burst**2))
    t1 = np.arange(n1) / max(n1 - 1, 1)
    env1 = np.exp(np.log(_PHASE1_END_LEVEL) * t1) * _attack_ramp(n1, fs)
    phase1 = burst * env1

    # Intermediate phase: band-limited unit-RMS noise with exponential decay.
    band = WET_NOISE_BAND if params.wet else DRY_NOISE_BAND
    noise = _band_noise(n2, band, fs, rng)
    t2 = np.arange(n2) / max(n2 - 1, 1)
    env2 = _PHASE2_START_LEVEL * np.exp(-params.decay * t2)
    phase2 = noise * env2

    parts = [phase1, phase2]
    if n3 > 0:
        t3 = np.arange(n3) / fs
        tone = np.sqrt(2.0) * np.sin(2 * np.pi * params.f0_hz * t3)
        env3 = _PHASE3_RMS_LEVEL * np.exp(-_PHASE3_DECAY * np.arange(n3) / max(n3 - 1, 1))
        parts.append(tone * env3 * _attack_ramp(n3, fs))
    samples = np.concatenate(parts)
    samples = samples / np.max(np.abs(samples)) * params.peak_amplitude

    boundaries = {"explosive": (0, n1), "intermediate": (n1, n1 + n2)}
    pattern = "two_phase"
    if n3 > 0:
        boundaries["voiced"] = (n1 + n2, n1 + n2 + n3)
        pattern = "three_phase"
    truth = {
        "phases": boundaries,
        "pattern": pattern,
        "wet": params.wet,
        "n_samples": samples.size,
    }
    return samples, truth


def _sample_params(profile: ClassProfile, rng: np.random.Generator) -> CoughSynthesisParams:
    phase3 = bool(rng.random() < profile.phase3_probability)
    return CoughSynthesisParams(
        phase1_ms=float(rng.uniform(*PHASE1_RANGE_MS)),
        phase2_ms=float(rng.uniform(120.0, PHASE2_RANGE_MS[1])),
        phase3=phase3,
        phase3_ms=float(rng.uniform(*PHASE3_RANGE_MS)),
        f0_hz=float(rng.uniform(*F0_RANGE_HZ)),
        wet=bool(rng.random() < profile.wet_probability),
        peak_amplitude=float(rng.uniform(0.5, 0.9)),
        decay=float(rng.uniform(1.2, 1.8)),
    )


def _pink_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-power pink (1/f) noise via spectral shaping."""
    white = rng.normal(size=n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n)
    shaping = np.zeros_like(freqs)
    shaping[1:] = 1.0 / np.sqrt(freqs[1:])
    shaped = np.fft.irfft(spectrum * shaping, n=n)
    return shaped / np.sqrt(np.mean(shaped**2))


def _sample_sensor(profile: ClassProfile, rng: np.random.Generator) -> dict:
    def draw(dist: NormalClipped | None):
        if dist is None or rng.random() < profile.sensor_missing_probability:
            return None
        return round(dist.sample(rng), 2)

    return {
        "temp_c": draw(profile.temp_c),
        "airflow_peak_lps": draw(profile.airflow_peak_lps),
        "airflow_volume_l": draw(profile.airflow_volume_l),
    }


def synth_clip(profile: ClassProfile, fs: int, rng: np.random.Generator):
    """One clip: background plus 1..N coughs; returns (samples, segments)."""
    n_coughs = int(rng.integers(profile.cough_count[0], profile.cough_count[1] + 1))
    coughs = []
    for _ in range(n_coughs):
        params = _sample_params(profile, rng)
        wave, truth = synth_cough(params, fs, rng)
        coughs.append((wave, truth))

    pieces = []
    segments = []
    cursor = 0
    for wave, truth in coughs:
        gap = int(rng.uniform(0.35, 0.7) * fs)
        pieces.append(np.zeros(gap))
        cursor += gap
        start = cursor
        pieces.append(wave)
        cursor += wave.size
        segments.append(
            {
                "start_sample": start,
                "end_sample": cursor,
                "pattern": truth["pattern"],
                "wet": truth["wet"],
                "phases": {
                    name: (start + lo, start + hi) for name, (lo, hi) in truth["phases"].items()
                },
            }
        )
    pieces.append(np.zeros(int(rng.uniform(0.35, 0.7) * fs)))
    samples = np.concatenate(pieces)
    return samples, segments


def add_background(samples: np.ndarray, segments: list[dict], snr_db: float | None,
                   rng: np.random.Generator) -> np.ndarray:
    """Mix in pink noise at snr_db relative to mean cough power; None or
    infinite SNR leaves the clip noiseless."""
    if snr_db is None or math.isinf(snr_db):
        return samples
    cough_mask = np.zeros(samples.size, dtype=bool)
    for seg in segments:
        cough_mask[seg["start_sample"] : seg["end_sample"]] = True
    cough_power = float(np.mean(samples[cough_mask] ** 2))
    noise_power = cough_power / (10.0 ** (snr_db / 10.0))
    noise = _pink_noise(samples.size, rng) * np.sqrt(noise_power)
    mixed = samples + noise
    peak = np.max(np.abs(mixed))
    if peak > 0.999:
        mixed = mixed / peak * 0.999
    return mixed


_CORPUS_README = """\
Synthetic cough corpus
======================

Generated by coughpoc's corpus synthesizer.  Clips are {fs} Hz mono PCM-16
WAV files containing 1-3 synthetic coughs over pink background noise.

Each cough follows the three-phase anatomy: a broadband explosive burst, an
exponentially decaying intermediate phase whose noise sits in {wet_band} Hz
for wet coughs and {dry_band} Hz for dry coughs, and an optional damped
sinusoid voiced tail.  Amplitude levels, decay rates, gap lengths, and the
class -> sensor-value distributions are corpus conventions chosen to make
the labels learnable; they are not clinical claims.

Files
-----
clips/*.wav      audio clips
manifest.jsonl   one record per clip: id, wav, label, sensor values
truth.jsonl      ground-truth segment boundaries, patterns, wet flags
"""


def synth_corpus(
    out_dir,
    n_clips: int,
    profiles=DEFAULT_PROFILES,
    snr_db: float | None = 10.0,
    seed: int = 0,
    fs: int = CANONICAL_RATE_HZ,
) -> dict:
    """Write a labelled corpus: WAV clips, manifest.jsonl, truth.jsonl.

    Clips cycle through the profiles so classes stay balanced; every clip is
    reproducible from (seed, clip index).
    """
    if n_clips < 1:
        raise ValueError("n_clips must be at least 1")
    out_dir = Path(out_dir)
    clips_dir = out_dir / "clips"
    clips_dir.mkdir(parents=True, exist_ok=True)

    manifest_rows = []
    truth_rows = []
    for i in range(n_clips):
        profile = profiles[i % len(profiles)]
        rng = np.random.default_rng([seed, i])
        samples, segments = synth_clip(profile, fs, rng)
        samples = add_background(samples, segments, snr_db, rng)
        clip_id = f"clip{i:04d}"
        wav_rel = f"clips/{clip_id}.wav"
        save_wav(AudioClip(samples=samples, sample_rate_hz=fs), out_dir / wav_rel)
        sensor = _sample_sensor(profile, rng)
        manifest_rows.append({"id": clip_id, "wav": wav_rel, "label": profile.name, **sensor})
        truth_rows.append({"id": clip_id, "wav": wav_rel, "label": profile.name,
                           "segments": segments})

    with open(out_dir / "manifest.jsonl", "w") as fh:
        for row in manifest_rows:
            fh.write(json.dumps(row) + "\n")
    with open(out_dir / "truth.jsonl", "w") as fh:
        for row in truth_rows:
            fh.write(json.dumps(row) + "\n")
    (out_dir / "README.md").write_text(
        _CORPUS_README.format(fs=fs, wet_band=WET_NOISE_BAND, dry_band=DRY_NOISE_BAND)
    )
    return {
        "n_clips": n_clips,
        "labels": [p.name for p in profiles],
        "manifest": str(out_dir / "manifest.jsonl"),
        "truth": str(out_dir / "truth.jsonl"),
    }


def load_truth(path) -> list[dict]:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows
