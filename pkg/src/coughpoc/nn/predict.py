"""Membership-score prediction: softmax outputs as per-class degrees of
truth, with the argmax as the preliminary diagnosis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MembershipVector:
    """Per-class scores in [0, 1] summing to 1."""

    values: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size != len(self.class_names):
            raise ValueError("one membership per class required")
        if np.any(values < 0) or abs(values.sum() - 1.0) > 1e-6:
            raise ValueError("memberships must be non-negative and sum to 1")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def diagnosis(self) -> str:
        return self.class_names[int(np.argmax(self.values))]

    def to_dict(self) -> dict:
        return {name: float(v) for name, v in zip(self.class_names, self.values)}


def predict_memberships(model, x: np.ndarray) -> MembershipVector:
    """Memberships for a single input (feature row or spectrogram)."""
    x = np.asarray(x, dtype=np.float64)
    probs = model.predict_proba(x[None, ...] if x.ndim in (1, 2) else x)
    if probs.shape[0] != 1:
        probs = probs[:1]
    return MembershipVector(values=probs[0], class_names=model.class_names)


def mean_membership(memberships: list[MembershipVector]) -> MembershipVector:
    """Average several per-cough membership vectors into a clip-level one."""
    if not memberships:
        raise ValueError("need at least one membership vector")
    stacked = np.vstack([m.values for m in memberships])
    mean = stacked.mean(axis=0)
    return MembershipVector(values=mean / mean.sum(), class_names=memberships[0].class_names)
