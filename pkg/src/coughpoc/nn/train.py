"""Mini-batch gradient-descent training with a rollback learning-rate
schedule, plus the finite-difference gradient checker."""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError
from .cnn import CnnModel
from .common import cross_entropy, labels_to_indices, one_hot
from .mlp import MlpModel

DEFAULT_HIDDEN = (32, 16)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    train_fraction: float = 0.8
    l2: float = 0.0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if not 0.5 <= self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in [0.5, 1)")


def _objective(model, X, y_idx, l2: float) -> float:
    loss = cross_entropy(model.predict_proba(X), y_idx)
    if l2 > 0:
        loss += 0.5 * l2 * sum(
            float(np.sum(a**2)) for name, a in model.parameters() if a.ndim > 1
        )
    return loss


def _snapshot(model):
    return [a.copy() for _, a in model.parameters()]


def _restore(model, saved):
    for (_, a), s in zip(model.parameters(), saved):
        a[...] = s


def _fit(model, X, y_idx, config: TrainConfig) -> list[float]:
    """Run the epochs; returns the per-epoch full-training-set loss curve.

    After every epoch the full objective is evaluated: if it increased, the
    epoch is rolled back and the learning rate halved, so the recorded curve
    never increases.
    """
    rng = np.random.default_rng(config.seed)
    y_hot = one_hot(y_idx, model.n_classes)
    n = X.shape[0]
    lr = config.learning_rate
    prev_loss = _objective(model, X, y_idx, config.l2)
    if not np.isfinite(prev_loss):
        raise DivergenceError(0, "initial loss is not finite")
    saved = _snapshot(model)
    losses = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            model.gradient_step(X[batch], y_hot[batch], lr, config.l2)
        loss = _objective(model, X, y_idx, config.l2)
        if not np.isfinite(loss):
            raise DivergenceError(epoch)
        if loss > prev_loss:
            _restore(model, saved)
            lr *= 0.5
            losses.append(prev_loss)
        else:
            saved = _snapshot(model)
            prev_loss = loss
            losses.append(loss)
    return losses


def train_mlp(rows: np.ndarray, labels, config: TrainConfig = TrainConfig(),
              hidden: tuple[int, ...] = DEFAULT_HIDDEN, class_names=None):
    """Train an MLP on normalized feature rows; returns (model, loss_curve)."""
    rows = np.asarray(rows, dtype=np.float64)
    class_names = tuple(class_names) if class_names else tuple(sorted(set(labels)))
    if len(class_names) < 2:
        raise ValueError("training needs at least 2 classes")
    y_idx = labels_to_indices(labels, class_names)
    model = MlpModel.initialize(rows.shape[1], hidden, class_names, seed=config.seed)
    losses = _fit(model, rows, y_idx, config)
    return model, losses


def train_cnn(spectrograms: np.ndarray, labels, config: TrainConfig = TrainConfig(),
              conv_channels=(8, 16), class_names=None):
    """Train the CNN on stacked (n, frames, bands) log-mel inputs."""
    spectrograms = np.asarray(spectrograms, dtype=np.float64)
    if spectrograms.ndim != 3:
        raise ValueError("spectrograms must be a (n, frames, bands) array")
    class_names = tuple(class_names) if class_names else tuple(sorted(set(labels)))
    if len(class_names) < 2:
        raise ValueError("training needs at least 2 classes")
    y_idx = labels_to_indices(labels, class_names)
    model = CnnModel.initialize(
        input_shape=spectrograms.shape[1:], conv_channels=conv_channels,
        class_names=class_names, seed=config.seed,
    )
    losses = _fit(model, spectrograms, y_idx, config)
    return model, losses


def gradient_check(model, X, labels_or_idx, l2: float = 0.0, n_samples: int = 200,
                   step: float = 1e-5, seed: int = 0) -> float:
    """Max relative error between backprop and central finite differences.

    Samples n_samples parameter coordinates across all arrays (all of them
    when the model is smaller than that) and perturbs each by +-step.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("gradient check needs a non-empty batch")
    if isinstance(labels_or_idx, np.ndarray) and labels_or_idx.dtype.kind in "iu":
        y_idx = labels_or_idx
    else:
        y_idx = labels_to_indices(labels_or_idx, model.class_names)
    y_hot = one_hot(y_idx, model.n_classes)

    analytic = dict(model.gradients(X, y_hot, l2))
    params = model.parameters()
    coords = []
    for name, array in params:
        for flat_idx in range(array.size):
            coords.append((name, flat_idx))
    rng = np.random.default_rng(seed)
    if len(coords) > n_samples:
        picked = rng.choice(len(coords), size=n_samples, replace=False)
        coords = [coords[i] for i in picked]

    arrays = dict(params)
    worst = 0.0
    for name, flat_idx in coords:
        array = arrays[name]
        original = array.flat[flat_idx]
        array.flat[flat_idx] = original + step
        loss_plus = _objective(model, X, y_idx, l2)
        array.flat[flat_idx] = original - step
        loss_minus = _objective(model, X, y_idx, l2)
        array.flat[flat_idx] = original
        numeric = (loss_plus - loss_minus) / (2.0 * step)
        exact = analytic[name].flat[flat_idx]
        scale = max(abs(numeric) + abs(exact), 1e-10)
        worst = max(worst, float(abs(numeric - exact) / scale))
    return worst
