"""Clip-level analysis glue: detect, segment phases, classify wet/dry,
extract features, and (with a model) produce membership scores."""

from __future__ import annotations

import numpy as np

import numpy as np

from .audio import CANONICAL_RATE_HZ, AudioClip, resample
from .detect import DetectorConfig, classify_wet_dry, detect_coughs, segment_phases
from .errors import PhaseMissingError, SegmentTooShortError
from .features import apply_normalizer, extract_features, fuse, SensorRecord
from .nn.cnn import CnnModel, clip_to_spectrogram
from .nn.predict import MembershipVector, mean_membership, predict_memberships


def _segment_clip(clip: AudioClip, segment) -> AudioClip:
    return AudioClip(
        samples=clip.samples[segment.start_sample : segment.end_sample].copy(),
        sample_rate_hz=clip.sample_rate_hz,
    )


def _segment_membership(clip, phased, features, sensor, model) -> MembershipVector:
    if isinstance(model, CnnModel):
        x = clip_to_spectrogram(_segment_clip(clip, phased), *model.input_shape)
    else:
        x = fuse(features, sensor).values
    if model.normalizer is not None:
        x = apply_normalizer(model.normalizer, x)
    return predict_memberships(model, x)


def analyze_clip(clip: AudioClip, sensor: SensorRecord | None = None, model=None,
                 detector_config: DetectorConfig | None = None) -> dict:
    """Run the full pipeline over one clip.

    Returns a dict with per-segment summaries (phases, wet/dry, features)
    plus, when a model is supplied, clip-level memberships and the argmax
    diagnosis.  Sensor values are fused into every cough's feature row.
    """
    sensor = sensor or SensorRecord()
    clip = resample(clip, CANONICAL_RATE_HZ)
    detector_config = detector_config or DetectorConfig()

    segment_views = []
    memberships: list[MembershipVector] = []
    for segment in detect_coughs(clip, detector_config):
        phased = segment_phases(clip, segment)
        view = phased.to_dict(clip.sample_rate_hz)
        try:
            view["wet_dry"] = classify_wet_dry(clip, phased).to_dict()
        except PhaseMissingError:
            view["wet_dry"] = None
        try:
            features = extract_features(clip, phased)
        except (SegmentTooShortError, PhaseMissingError):
            features = None
        if features is not None:
            view["features"] = features.values.tolist()
            if model is not None:
                memberships.append(
                    _segment_membership(clip, phased, features, sensor, model)
                )
        segment_views.append(view)

    result = {
        "sample_rate_hz": clip.sample_rate_hz,
        "duration_s": clip.duration_s,
        "segments": segment_views,
        "memberships": None,
        "diagnosis": None,
    }
    if memberships:
        combined = mean_membership(memberships)
        result["memberships"] = combined.to_dict()
        result["diagnosis"] = combined.diagnosis
    return result


def collect_spectrograms(entries, base_dir, n_frames: int = 64, n_filters: int = 26,
                         detector_config: DetectorConfig | None = None):
    """Per-cough fixed-size log-mel inputs for CNN training.

    Returns (array of shape (n, n_frames, n_filters), labels, clip_ids).
    """
    from pathlib import Path

    from .audio import load_wav

    detector_config = detector_config or DetectorConfig()
    base = Path(base_dir)
    inputs, labels, clip_ids = [], [], []
    for entry in entries:
        clip = resample(load_wav(base / entry.wav), CANONICAL_RATE_HZ)
        for segment in detect_coughs(clip, detector_config):
            inputs.append(clip_to_spectrogram(_segment_clip(clip, segment),
                                              n_frames, n_filters))
            labels.append(entry.label)
            clip_ids.append(entry.id)
    stacked = np.array(inputs) if inputs else np.empty((0, n_frames, n_filters))
    return stacked, np.asarray(labels), clip_ids
