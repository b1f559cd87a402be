"""Command-line behaviors: exit codes, JSON output, reproducibility,
figure and CSV artifacts."""

import json

import numpy as np
import pytest

from coughpoc.cli import main

from .conftest import wav_bytes


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_synth_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    code, _, _ = run_cli(capsys, "--seed", "7", "synth", "--out", str(a), "--n", "6")
    assert code == 0
    code, _, _ = run_cli(capsys, "--seed", "7", "synth", "--out", str(b), "--n", "6")
    assert code == 0
    for i in range(6):
        assert (a / "clips" / f"clip{i:04d}.wav").read_bytes() == (
            b / "clips" / f"clip{i:04d}.wav"
        ).read_bytes()
    assert (a / "manifest.jsonl").read_text() == (b / "manifest.jsonl").read_text()


def test_analyze_silence_exits_zero(tmp_path, capsys):
    wav = tmp_path / "silence.wav"
    wav.write_bytes(wav_bytes(np.zeros(22050)))
    code, out, err = run_cli(capsys, "--json", "analyze", str(wav))
    assert code == 0
    payload = json.loads(out.splitlines()[-1])
    assert payload["segments"] == []
    assert "config:" in err


def test_analyze_prints_config_and_segments(small_corpus, capsys, tmp_path):
    manifest = json.loads((small_corpus / "manifest.jsonl").read_text().splitlines()[0])
    wav = str(small_corpus / manifest["wav"])
    figures = tmp_path / "figs"
    mfcc_csv = tmp_path / "mfcc.csv"
    code, out, _ = run_cli(
        capsys, "--json", "analyze", wav,
        "--figures-dir", str(figures), "--mfcc-csv", str(mfcc_csv),
    )
    assert code == 0
    payload = json.loads(out.splitlines()[-1])
    assert len(payload["segments"]) >= 1
    assert payload["segments"][0]["phases"]
    assert (figures / "waveform.png").stat().st_size > 0
    assert (figures / "spectrogram.png").stat().st_size > 0
    header = mfcc_csv.read_text().splitlines()[0]
    assert header.startswith("mfcc_2,")


def test_analyze_missing_file_exit_1(capsys):
    code, _, err = run_cli(capsys, "analyze", "/nonexistent/clip.wav")
    assert code == 1
    assert "error:" in err


def test_analyze_with_sensor_meta(small_corpus, trained_model_path, capsys):
    manifest = json.loads((small_corpus / "manifest.jsonl").read_text().splitlines()[0])
    wav = str(small_corpus / manifest["wav"])
    code, out, _ = run_cli(
        capsys, "--json", "analyze", wav,
        "--model", str(trained_model_path), "--meta", '{"temp_c": 38.8}',
    )
    assert code == 0
    payload = json.loads(out.splitlines()[-1])
    assert payload["diagnosis"] in payload["memberships"]

    code, _, err = run_cli(capsys, "analyze", wav, "--meta", "{bad json")
    assert code == 1
    code, _, err = run_cli(capsys, "analyze", wav, "--meta", '{"temp_c": 99}')
    assert code == 1


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        main(["synth", "--nope"])
    assert info.value.code == 2


def test_train_eval_round_trip(small_corpus, tmp_path, capsys):
    model_path = tmp_path / "model.cpocm"
    figures = tmp_path / "figs"
    code, out, err = run_cli(
        capsys, "--json", "--seed", "5", "train",
        "--manifest", str(small_corpus / "manifest.jsonl"),
        "--out", str(model_path), "--epochs", "120",
        "--figures-dir", str(figures),
    )
    assert code == 0, err
    payload = json.loads(out.splitlines()[-1])
    assert payload["metrics"]["accuracy"] >= 0.5
    assert "split:" in err and "normalizer fits on train rows only" in err
    assert model_path.exists()
    assert (figures / "loss_curve.png").stat().st_size > 0
    assert (figures / "confusion.png").stat().st_size > 0

    code, out, _ = run_cli(
        capsys, "--json", "eval",
        "--model", str(model_path),
        "--manifest", str(small_corpus / "manifest.jsonl"),
    )
    assert code == 0
    evaluation = json.loads(out.splitlines()[-1])
    assert evaluation["rows"] > 0
    assert 0.0 <= evaluation["metrics"]["accuracy"] <= 1.0


def test_train_reproducible(small_corpus, tmp_path, capsys):
    outs = []
    for name in ("m1.cpocm", "m2.cpocm"):
        code, out, _ = run_cli(
            capsys, "--json", "--seed", "11", "train",
            "--manifest", str(small_corpus / "manifest.jsonl"),
            "--out", str(tmp_path / name), "--epochs", "60",
        )
        assert code == 0
        outs.append(json.loads(out.splitlines()[-1])["metrics"])
    assert outs[0] == outs[1]
    assert (tmp_path / "m1.cpocm").read_bytes() == (tmp_path / "m2.cpocm").read_bytes()


def test_bad_manifest_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("not json at all\n")
    code, _, err = run_cli(
        capsys, "train", "--manifest", str(bad), "--out", str(tmp_path / "m.cpocm")
    )
    assert code == 1
    assert "line 1" in err


def test_gradcheck_command(capsys):
    code, out, _ = run_cli(capsys, "--json", "gradcheck", "--arch", "both")
    assert code == 0
    payload = json.loads(out.splitlines()[-1])
    assert payload["mlp"]["ok"] and payload["cnn"]["ok"]
    assert payload["mlp"]["max_relative_error"] < 1e-4
    assert payload["cnn"]["max_relative_error"] < 1e-3
