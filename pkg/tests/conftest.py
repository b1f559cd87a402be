"""Shared fixtures: a small labelled corpus and a model trained on it."""

import io
import wave

import numpy as np
import pytest

from coughpoc.features import (
    apply_normalizer,
    collect_fused_rows,
    fit_normalizer,
    load_manifest,
)
from coughpoc.nn import TrainConfig, save_model, train_mlp
from coughpoc.synth import synth_corpus


def wav_bytes(samples: np.ndarray, fs: int = 22050) -> bytes:
    pcm = np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(fs)
        wav.writeframes(pcm.tobytes())
    return buf.getvalue()


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus_small")
    synth_corpus(out, n_clips=45, snr_db=10.0, seed=202)
    return out


@pytest.fixture(scope="session")
def small_corpus_rows(small_corpus):
    entries = load_manifest(small_corpus / "manifest.jsonl")
    matrix, labels, clip_ids = collect_fused_rows(entries, small_corpus)
    return matrix, labels, clip_ids


@pytest.fixture(scope="session")
def trained_model_path(small_corpus_rows, tmp_path_factory):
    matrix, labels, _ = small_corpus_rows
    norm = fit_normalizer(matrix)
    config = TrainConfig(learning_rate=0.5, epochs=150, batch_size=16, seed=3)
    model, _ = train_mlp(apply_normalizer(norm, matrix), labels, config)
    model.normalizer = norm
    path = tmp_path_factory.mktemp("model") / "model.cpocm"
    save_model(model, path)
    return path
