"""Feature extraction, fusion, normalization, Fisher ranking, splits."""

import numpy as np
import pytest

from coughpoc.audio import AudioClip
from coughpoc.detect import CoughSegment, detect_coughs, segment_phases
from coughpoc.errors import (
    InsufficientDataError,
    PhaseMissingError,
    SegmentTooShortError,
    StratificationError,
)
from coughpoc.features import (
    FEATURE_NAMES,
    FUSED_NAMES,
    N_FEATURES,
    N_FUSED,
    FeatureVector,
    ManifestEntry,
    SensorRecord,
    apply_normalizer,
    extract_features,
    fisher_score,
    fit_normalizer,
    fuse,
    load_manifest,
    save_manifest,
    select_top_k,
    split_dataset,
    write_feature_csv,
)
from coughpoc.synth import CoughSynthesisParams, synth_cough

FS = 22050


@pytest.fixture(scope="module")
def dry_cough_clip():
    rng = np.random.default_rng(0)
    samples = rng.normal(size=FS * 2) * 0.0008
    wave, _ = synth_cough(CoughSynthesisParams(phase1_ms=50, phase2_ms=250, wet=False), FS, rng)
    samples[FS // 2 : FS // 2 + wave.size] += wave
    clip = AudioClip(samples=samples, sample_rate_hz=FS)
    segment = segment_phases(clip, detect_coughs(clip)[0])
    return clip, segment


def test_layout_sizes():
    assert N_FEATURES == 35
    assert N_FUSED == 41
    assert len(set(FUSED_NAMES)) == 41


def test_extraction_deterministic(dry_cough_clip):
    clip, segment = dry_cough_clip
    a = extract_features(clip, segment)
    b = extract_features(clip, segment)
    assert np.array_equal(a.values, b.values)


def test_scale_invariant_components(dry_cough_clip):
    clip, segment = dry_cough_clip
    doubled = AudioClip(samples=np.clip(clip.samples * 2, -1, 1), sample_rate_hz=FS)
    a = extract_features(clip, segment)
    b = extract_features(doubled, segment)
    assert a["zcr_mean"] == pytest.approx(b["zcr_mean"], rel=1e-9)
    assert a["wet_dry_ratio"] == pytest.approx(b["wet_dry_ratio"], rel=1e-6)


def test_dry_cough_ratio_below_one(dry_cough_clip):
    clip, segment = dry_cough_clip
    fv = extract_features(clip, segment)
    assert fv["wet_dry_ratio"] < 1.0
    assert fv["pattern_two_phase"] == 1.0
    assert fv["pattern_three_phase"] == 0.0


def test_extraction_requires_phases_and_length():
    clip = AudioClip(samples=np.random.default_rng(1).normal(size=FS), sample_rate_hz=FS)
    bare = CoughSegment(start_sample=0, end_sample=5000, peak_amplitude=1.0, duration_ms=227.0)
    with pytest.raises(PhaseMissingError):
        extract_features(clip, bare)
    tiny = segment_phases(
        clip, CoughSegment(start_sample=0, end_sample=300, peak_amplitude=1.0, duration_ms=13.6)
    )
    with pytest.raises(SegmentTooShortError):
        extract_features(clip, tiny)


def test_fuse_imputation():
    fv = FeatureVector(values=np.arange(N_FEATURES, dtype=float))
    empty = fuse(fv, SensorRecord())
    assert empty.values.shape == (N_FUSED,)
    assert np.all(empty.values[35:] == 0.0)

    partial = fuse(fv, SensorRecord(temp_c=38.5))
    assert partial.values[35] == 38.5
    assert tuple(partial.values[38:]) == (1.0, 0.0, 0.0)


def test_sensor_validation():
    with pytest.raises(ValueError):
        SensorRecord(temp_c=50.0)
    with pytest.raises(ValueError):
        SensorRecord(airflow_peak_lps=-1.0)


def test_normalizer_zscore():
    rows = np.array([[0.0, 5.0], [2.0, 5.0]])
    norm = fit_normalizer(rows)
    out = apply_normalizer(norm, rows)
    # column {0, 2} -> {-1, +1} with population std; constant column unchanged
    assert np.allclose(out[:, 0], [-1.0, 1.0])
    assert np.allclose(out[:, 1], 0.0)

    rng = np.random.default_rng(2)
    big = rng.normal(size=(50, 7)) * 3 + 11
    normalized = apply_normalizer(fit_normalizer(big), big)
    assert np.max(np.abs(normalized.mean(axis=0))) < 1e-9
    assert np.max(np.abs(normalized.std(axis=0) - 1)) < 1e-9


def test_normalizer_needs_rows():
    with pytest.raises(InsufficientDataError):
        fit_normalizer(np.ones((1, 3)))


def test_normalizer_apply_is_affine():
    norm = fit_normalizer(np.array([[0.0, 1.0], [4.0, 3.0]]))
    x = np.array([2.0, 2.0])
    base = apply_normalizer(norm, np.zeros(2))
    assert np.allclose(
        apply_normalizer(norm, 3 * x) - base, 3 * (apply_normalizer(norm, x) - base)
    )


def test_fisher_score_ranks_signal_over_noise():
    rng = np.random.default_rng(3)
    labels = np.array([0] * 40 + [1] * 40)
    informative = labels + rng.normal(scale=0.01, size=80)
    noise = rng.normal(size=80)
    rows = np.column_stack([informative, noise])
    scores = fisher_score(rows, labels)
    assert scores[0] > scores[1]
    assert select_top_k(scores, 1)[0] == 0


def test_fisher_score_constant_feature_zero():
    labels = np.array([0, 0, 1, 1])
    rows = np.column_stack([np.ones(4), [0.0, 1.0, 2.0, 3.0]])
    scores = fisher_score(rows, labels)
    assert scores[0] == 0.0


def test_fisher_score_shift_invariant():
    rng = np.random.default_rng(4)
    labels = np.array([0] * 10 + [1] * 10)
    rows = rng.normal(size=(20, 3))
    scores = fisher_score(rows, labels)
    shifted = fisher_score(rows + np.array([100.0, -5.0, 0.3]), labels)
    assert np.allclose(scores, shifted)


def test_fisher_score_validation():
    with pytest.raises(ValueError):
        fisher_score(np.ones((4, 2)), np.zeros(4))
    with pytest.raises(ValueError):
        fisher_score(np.ones((3, 2)), np.array([0, 1, 1]))


def test_select_top_k():
    scores = np.array([0.1, 0.9, 0.5])
    assert list(select_top_k(scores, 2)) == [1, 2]
    assert list(select_top_k(scores, 3)) == [0, 1, 2]
    ties = np.array([0.5, 0.5, 0.5, 0.1])
    assert list(select_top_k(ties, 2)) == [0, 1]
    with pytest.raises(ValueError):
        select_top_k(scores, 0)
    with pytest.raises(ValueError):
        select_top_k(scores, 4)


def make_entries(n_per_class, labels=("a", "b", "c")):
    entries = []
    for label in labels:
        for i in range(n_per_class):
            entries.append(
                ManifestEntry(id=f"{label}{i}", wav=f"{label}{i}.wav", label=label,
                              sensor=SensorRecord())
            )
    return entries


def test_split_stratified_and_deterministic():
    entries = make_entries(20)
    train, test = split_dataset(entries, 0.8, seed=5)
    assert len(train) == 48 and len(test) == 12
    for label in ("a", "b", "c"):
        assert sum(1 for e in train if e.label == label) == 16
        assert sum(1 for e in test if e.label == label) == 4
    train_ids = {e.id for e in train}
    test_ids = {e.id for e in test}
    assert train_ids.isdisjoint(test_ids)
    assert train_ids | test_ids == {e.id for e in entries}

    train2, test2 = split_dataset(entries, 0.8, seed=5)
    assert [e.id for e in train2] == [e.id for e in train]
    assert [e.id for e in test2] == [e.id for e in test]


def test_split_validation():
    entries = make_entries(10)
    with pytest.raises(ValueError):
        split_dataset(entries, 0.3)
    lonely = entries + [ManifestEntry(id="x", wav="x.wav", label="rare", sensor=SensorRecord())]
    with pytest.raises(StratificationError):
        split_dataset(lonely, 0.8)


def test_manifest_round_trip(tmp_path):
    entries = [
        ManifestEntry(id="a1", wav="clips/a1.wav", label="flu_like",
                      sensor=SensorRecord(temp_c=38.2)),
        ManifestEntry(id="a2", wav="clips/a2.wav", label="healthy", sensor=SensorRecord()),
    ]
    path = tmp_path / "manifest.jsonl"
    save_manifest(entries, path)
    loaded = load_manifest(path)
    assert loaded == entries


def test_manifest_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "wav": "a.wav", "label": "x"}\n{"id": "a"}\n')
    with pytest.raises(ValueError, match="line 2"):
        load_manifest(path)
    dup = tmp_path / "dup.jsonl"
    dup.write_text(
        '{"id": "a", "wav": "a.wav", "label": "x"}\n{"id": "a", "wav": "b.wav", "label": "x"}\n'
    )
    with pytest.raises(ValueError, match="duplicate"):
        load_manifest(dup)


def test_feature_csv_header(tmp_path):
    matrix = np.zeros((2, N_FUSED))
    path = tmp_path / "features.csv"
    write_feature_csv(matrix, path)
    header = path.read_text().splitlines()[0].split(",")
    assert header == list(FUSED_NAMES)
