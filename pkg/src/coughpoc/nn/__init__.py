"""Trainable classifiers over fused vectors and log-mel spectrograms.

Both models are plain numpy with hand-written backpropagation, validated by
finite-difference gradient checks; outputs are softmax membership scores,
one per illness class.
"""

from .cnn import CnnModel, clip_to_spectrogram
from .metrics import Metrics, evaluate
from .mlp import MlpModel
from .model_io import load_model, save_model
from .predict import MembershipVector, predict_memberships
from .train import TrainConfig, gradient_check, train_cnn, train_mlp

__all__ = [
    "CnnModel",
    "Metrics",
    "MembershipVector",
    "MlpModel",
    "TrainConfig",
    "clip_to_spectrogram",
    "evaluate",
    "gradient_check",
    "load_model",
    "predict_memberships",
    "save_model",
    "train_cnn",
    "train_mlp",
]
