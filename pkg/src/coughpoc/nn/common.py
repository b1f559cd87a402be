"""Shared pieces for the numpy classifiers."""

from __future__ import annotations

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


def one_hot(y_idx: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((y_idx.size, n_classes))
    out[np.arange(y_idx.size), y_idx] = 1.0
    return out


def labels_to_indices(labels, class_names) -> np.ndarray:
    index = {name: i for i, name in enumerate(class_names)}
    try:
        return np.array([index[l] for l in labels])
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} not in class list {list(class_names)}") from exc


def cross_entropy(probs: np.ndarray, y_idx: np.ndarray) -> float:
    picked = probs[np.arange(y_idx.size), y_idx]
    return float(-np.mean(np.log(np.maximum(picked, 1e-300))))
