"""Synthetic corpus generator checks: determinism, balance, band placement."""

import json

import numpy as np
import pytest

from coughpoc.audio import load_wav
from coughpoc.dsp import band_energy, next_power_of_two, periodogram
from coughpoc.errors import SynthesisParameterError
from coughpoc.synth import (
    DEFAULT_PROFILES,
    CoughSynthesisParams,
    load_truth,
    synth_corpus,
    synth_cough,
)

FS = 22050


def test_wet_band_ratio_by_construction():
    params = CoughSynthesisParams(phase1_ms=40, phase2_ms=250, wet=True)
    wave, truth = synth_cough(params, FS, rng=1)
    lo, hi = truth["phases"]["intermediate"]
    phase2 = wave[lo:hi]
    spectrum = periodogram(phase2, next_power_of_two(phase2.size), FS)
    ratio = band_energy(spectrum, 0, 750) / band_energy(spectrum, 1500, 2250)
    assert ratio > 3.0


def test_dry_band_ratio_by_construction():
    params = CoughSynthesisParams(phase1_ms=40, phase2_ms=250, wet=False)
    wave, truth = synth_cough(params, FS, rng=1)
    lo, hi = truth["phases"]["intermediate"]
    phase2 = wave[lo:hi]
    spectrum = periodogram(phase2, next_power_of_two(phase2.size), FS)
    ratio = band_energy(spectrum, 0, 750) / band_energy(spectrum, 1500, 2250)
    assert ratio < 1.0 / 3.0


def test_phase3_flag_controls_pattern():
    two, truth2 = synth_cough(CoughSynthesisParams(phase3=False), FS, rng=2)
    assert truth2["pattern"] == "two_phase"
    assert "voiced" not in truth2["phases"]
    three, truth3 = synth_cough(CoughSynthesisParams(phase3=True), FS, rng=2)
    assert truth3["pattern"] == "three_phase"
    assert truth3["phases"]["voiced"][1] == three.size


def test_same_seed_same_waveform():
    params = CoughSynthesisParams(phase3=True, wet=True)
    a, _ = synth_cough(params, FS, rng=42)
    b, _ = synth_cough(params, FS, rng=42)
    assert np.array_equal(a, b)


def test_parameter_validation():
    with pytest.raises(SynthesisParameterError):
        CoughSynthesisParams(phase1_ms=10)
    with pytest.raises(SynthesisParameterError):
        CoughSynthesisParams(phase2_ms=600)
    with pytest.raises(SynthesisParameterError):
        CoughSynthesisParams(phase3=True, f0_hz=1000)
    with pytest.raises(SynthesisParameterError):
        CoughSynthesisParams(peak_amplitude=0.0)


def test_corpus_layout_and_balance(tmp_path):
    out = tmp_path / "corpus"
    info = synth_corpus(out, n_clips=30, snr_db=10.0, seed=7)
    assert (out / "manifest.jsonl").exists()
    assert (out / "truth.jsonl").exists()
    assert (out / "README.md").exists()

    rows = [json.loads(l) for l in (out / "manifest.jsonl").read_text().splitlines()]
    assert len(rows) == 30
    counts = {}
    for row in rows:
        counts[row["label"]] = counts.get(row["label"], 0) + 1
    assert counts == {"covid_like": 10, "flu_like": 10, "healthy": 10}
    assert len({row["id"] for row in rows}) == 30

    truth = load_truth(out / "truth.jsonl")
    for t in truth:
        clip = load_wav(out / t["wav"])
        for seg in t["segments"]:
            assert 0 <= seg["start_sample"] < seg["end_sample"] <= len(clip)


def test_corpus_reproducible(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    synth_corpus(a, n_clips=6, snr_db=10.0, seed=99)
    synth_corpus(b, n_clips=6, snr_db=10.0, seed=99)
    for i in range(6):
        wav_a = (a / "clips" / f"clip{i:04d}.wav").read_bytes()
        wav_b = (b / "clips" / f"clip{i:04d}.wav").read_bytes()
        assert wav_a == wav_b
    assert (a / "manifest.jsonl").read_text() == (b / "manifest.jsonl").read_text()
    assert (a / "truth.jsonl").read_text() == (b / "truth.jsonl").read_text()


def test_sensor_distributions_separated(tmp_path):
    out = tmp_path / "corpus"
    synth_corpus(out, n_clips=90, snr_db=None, seed=3)
    rows = [json.loads(l) for l in (out / "manifest.jsonl").read_text().splitlines()]
    temps = {}
    for row in rows:
        if row["temp_c"] is not None:
            temps.setdefault(row["label"], []).append(row["temp_c"])
    fever_means = [np.mean(temps[k]) for k in ("covid_like", "flu_like")]
    healthy_mean = np.mean(temps["healthy"])
    for m in fever_means:
        assert m - healthy_mean > 1.0


def test_noiseless_corpus_fully_recallable(tmp_path):
    from coughpoc.detect import detect_coughs

    out = tmp_path / "clean"
    synth_corpus(out, n_clips=9, snr_db=None, seed=21)
    truth = load_truth(out / "truth.jsonl")
    for t in truth:
        clip = load_wav(out / t["wav"])
        detected = detect_coughs(clip)
        assert len(detected) >= len(t["segments"])
        for seg in t["segments"]:
            mid = (seg["start_sample"] + seg["end_sample"]) / 2
            assert any(d.start_sample <= mid <= d.end_sample for d in detected)
