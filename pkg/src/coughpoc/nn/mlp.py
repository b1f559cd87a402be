"""Multi-layer perceptron with logistic hidden units and a softmax head."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError
from .common import glorot_uniform, sigmoid, softmax


@dataclass
class MlpModel:
    """Fully connected net: at least two logistic hidden layers, softmax out.

    weights[i] maps layer i activations (rows) to layer i+1; biases align.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    class_names: tuple[str, ...]
    normalizer: object = field(default=None, repr=False)

    @classmethod
    def initialize(cls, input_dim: int, hidden: tuple[int, ...], class_names,
                   seed: int = 0) -> "MlpModel":
        if len(hidden) < 2:
            raise ValueError("model needs more than one hidden layer")
        class_names = tuple(class_names)
        sizes = (input_dim, *hidden, len(class_names))
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            weights.append(glorot_uniform(rng, fan_in, fan_out))
            biases.append(np.zeros(fan_out))
        return cls(layer_sizes=sizes, weights=weights, biases=biases,
                   class_names=class_names)

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.input_dim:
            raise ShapeError(f"expected {self.input_dim} inputs, got {X.shape[1]}")
        return X

    def forward(self, X: np.ndarray):
        """Returns (probs, cache); cache holds the activations backprop needs."""
        X = self._check_input(X)
        activations = [X]
        a = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = sigmoid(a @ W + b)
            activations.append(a)
        logits = a @ self.weights[-1] + self.biases[-1]
        probs = softmax(logits)
        return probs, activations

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)[0]

    def backward(self, activations, probs, y_onehot: np.ndarray, l2: float = 0.0):
        """Gradients of mean cross-entropy (+ l2/2 * ||W||^2) per parameter.

        Returned as (weight_grads, bias_grads) aligned with the model lists.
        """
        batch = y_onehot.shape[0]
        weight_grads = [None] * len(self.weights)
        bias_grads = [None] * len(self.biases)
        delta = (probs - y_onehot) / batch
        for i in range(len(self.weights) - 1, -1, -1):
            weight_grads[i] = activations[i].T @ delta + l2 * self.weights[i]
            bias_grads[i] = delta.sum(axis=0)
            if i > 0:
                a = activations[i]
                delta = (delta @ self.weights[i].T) * a * (1.0 - a)
        return weight_grads, bias_grads

    def parameters(self):
        """(name, array) pairs; arrays are the live views used by training."""
        out = []
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"W{i}", W))
            out.append((f"b{i}", b))
        return out

    def gradient_step(self, X, y_onehot, lr: float, l2: float = 0.0):
        probs, activations = self.forward(X)
        weight_grads, bias_grads = self.backward(activations, probs, y_onehot, l2)
        for W, g in zip(self.weights, weight_grads):
            W -= lr * g
        for b, g in zip(self.biases, bias_grads):
            b -= lr * g

    def gradients(self, X, y_onehot, l2: float = 0.0):
        probs, activations = self.forward(X)
        weight_grads, bias_grads = self.backward(activations, probs, y_onehot, l2)
        out = []
        for i, (gw, gb) in enumerate(zip(weight_grads, bias_grads)):
            out.append((f"W{i}", gw))
            out.append((f"b{i}", gb))
        return out
