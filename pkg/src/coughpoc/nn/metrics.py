"""Evaluation metrics: accuracy, confusion matrix, per-class sensitivity
and specificity, and the healthy-class false-alarm rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .common import labels_to_indices

HEALTHY_CLASS = "healthy"


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    confusion: np.ndarray  # rows = true class, cols = predicted
    class_names: tuple[str, ...]
    sensitivity: dict
    specificity: dict
    false_alarm_rate: float | None

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "class_names": list(self.class_names),
            "confusion": self.confusion.tolist(),
            "sensitivity": dict(self.sensitivity),
            "specificity": dict(self.specificity),
            "false_alarm_rate": self.false_alarm_rate,
        }


def metrics_from_confusion(confusion: np.ndarray, class_names) -> Metrics:
    confusion = np.asarray(confusion, dtype=np.int64)
    class_names = tuple(class_names)
    total = confusion.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    accuracy = float(np.trace(confusion) / total)
    sensitivity, specificity = {}, {}
    for i, name in enumerate(class_names):
        tp = confusion[i, i]
        fn = confusion[i].sum() - tp
        fp = confusion[:, i].sum() - tp
        tn = total - tp - fn - fp
        sensitivity[name] = float(tp / (tp + fn)) if tp + fn > 0 else 0.0
        specificity[name] = float(tn / (tn + fp)) if tn + fp > 0 else 0.0
    false_alarm = None
    if HEALTHY_CLASS in class_names:
        false_alarm = 1.0 - specificity[HEALTHY_CLASS]
    return Metrics(accuracy=accuracy, confusion=confusion, class_names=class_names,
                   sensitivity=sensitivity, specificity=specificity,
                   false_alarm_rate=false_alarm)


def evaluate(model, X: np.ndarray, labels) -> Metrics:
    """Score a model on held-out rows; the caller keeps them disjoint from
    the training set."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("empty test set")
    y_true = labels_to_indices(labels, model.class_names)
    y_pred = np.argmax(model.predict_proba(X), axis=1)
    n = len(model.class_names)
    confusion = np.zeros((n, n), dtype=np.int64)
    np.add.at(confusion, (y_true, y_pred), 1)
    return metrics_from_confusion(confusion, model.class_names)
