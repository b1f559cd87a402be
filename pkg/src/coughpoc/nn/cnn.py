"""Small convolutional net over log-mel spectrogram patches.

Two valid 3x3 convolution stages with logistic activations, each followed by
2x2 max pooling (floor on odd sizes), then a dense softmax head.  Written
directly in numpy with im2col so the backward pass stays checkable against
finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..audio import AudioClip
from ..dsp import LOG_ENERGY_FLOOR, FrameSpec, log_mel_spectrogram
from ..errors import ShapeError
from .common import glorot_uniform, sigmoid, softmax

SPECTROGRAM_FRAMES = 64
SPECTROGRAM_BANDS = 26


def clip_to_spectrogram(clip: AudioClip, n_frames: int = SPECTROGRAM_FRAMES,
                        n_filters: int = SPECTROGRAM_BANDS) -> np.ndarray:
    """Fixed-size log-mel input: non-overlapping 25 ms frames, padded with
    the log floor or truncated to n_frames rows."""
    spec = FrameSpec(frame_len_ms=25.0, hop_len_ms=25.0)
    matrix = log_mel_spectrogram(clip, spec, n_filters)
    out = np.full((n_frames, n_filters), np.log(LOG_ENERGY_FLOOR))
    rows = min(n_frames, matrix.shape[0])
    out[:rows] = matrix[:rows]
    return out


def _im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    """(B,H,W,C) -> (B, H-kh+1, W-kw+1, kh*kw*C) patch matrix."""
    b, h, w, c = x.shape
    out_h, out_w = h - kh + 1, w - kw + 1
    cols = np.empty((b, out_h, out_w, kh * kw * c))
    for i in range(kh):
        for j in range(kw):
            patch = x[:, i : i + out_h, j : j + out_w, :]
            cols[..., (i * kw + j) * c : (i * kw + j + 1) * c] = patch
    return cols


def _col2im(dcols: np.ndarray, x_shape, kh: int, kw: int) -> np.ndarray:
    """Scatter-add adjoint of _im2col."""
    b, h, w, c = x_shape
    out_h, out_w = h - kh + 1, w - kw + 1
    dx = np.zeros(x_shape)
    for i in range(kh):
        for j in range(kw):
            dx[:, i : i + out_h, j : j + out_w, :] += dcols[
                ..., (i * kw + j) * c : (i * kw + j + 1) * c
            ]
    return dx


def _maxpool(x: np.ndarray, size: int = 2):
    b, h, w, c = x.shape
    h2, w2 = h // size, w // size
    cropped = x[:, : h2 * size, : w2 * size, :]
    windows = cropped.reshape(b, h2, size, w2, size, c)
    pooled = windows.max(axis=(2, 4))
    return pooled, cropped.shape


def _maxpool_backward(dpooled: np.ndarray, x: np.ndarray, cropped_shape, size: int = 2):
    b, h, w, c = x.shape
    _, hc, wc, _ = cropped_shape
    h2, w2 = hc // size, wc // size
    cropped = x[:, :hc, :wc, :]
    windows = cropped.reshape(b, h2, size, w2, size, c)
    pooled = windows.max(axis=(2, 4), keepdims=True)
    mask = windows == pooled
    dwindows = mask * dpooled.reshape(b, h2, 1, w2, 1, c)
    dx = np.zeros_like(x)
    dx[:, :hc, :wc, :] = dwindows.reshape(b, hc, wc, c)
    return dx


@dataclass
class CnnModel:
    """Conv stages (kernels, biases) plus a dense softmax head."""

    input_shape: tuple[int, int]
    conv_channels: tuple[int, ...]
    kernel_size: int
    pool_size: int
    kernels: list[np.ndarray]  # (kh*kw*C_in, C_out) each
    conv_biases: list[np.ndarray]
    dense_weight: np.ndarray
    dense_bias: np.ndarray
    class_names: tuple[str, ...]
    normalizer: object = field(default=None, repr=False)

    @classmethod
    def initialize(cls, input_shape=(SPECTROGRAM_FRAMES, SPECTROGRAM_BANDS),
                   conv_channels=(8, 16), kernel_size: int = 3, pool_size: int = 2,
                   class_names=(), seed: int = 0) -> "CnnModel":
        class_names = tuple(class_names)
        rng = np.random.default_rng(seed)
        kernels, conv_biases = [], []
        h, w = input_shape
        c_in = 1
        for c_out in conv_channels:
            fan_in = kernel_size * kernel_size * c_in
            kernels.append(glorot_uniform(rng, fan_in, c_out))
            conv_biases.append(np.zeros(c_out))
            h, w = (h - kernel_size + 1) // pool_size, (w - kernel_size + 1) // pool_size
            c_in = c_out
        flat = h * w * c_in
        dense_weight = glorot_uniform(rng, flat, len(class_names))
        dense_bias = np.zeros(len(class_names))
        return cls(input_shape=tuple(input_shape), conv_channels=tuple(conv_channels),
                   kernel_size=kernel_size, pool_size=pool_size, kernels=kernels,
                   conv_biases=conv_biases, dense_weight=dense_weight,
                   dense_bias=dense_bias, class_names=class_names)

    @property
    def n_classes(self) -> int:
        return self.dense_weight.shape[1]

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 2:
            X = X[None, :, :]
        if X.ndim != 3 or X.shape[1:] != self.input_shape:
            raise ShapeError(f"expected inputs of shape {self.input_shape}, got {X.shape[1:]}")
        return X

    def forward(self, X: np.ndarray):
        X = self._check_input(X)
        a = X[..., None]
        cache = {"inputs": [], "cols": [], "activations": [], "pool_shapes": []}
        for kernel, bias in zip(self.kernels, self.conv_biases):
            cache["inputs"].append(a)
            cols = _im2col(a, self.kernel_size, self.kernel_size)
            z = cols @ kernel + bias
            act = sigmoid(z)
            pooled, cropped_shape = _maxpool(act, self.pool_size)
            cache["cols"].append(cols)
            cache["activations"].append(act)
            cache["pool_shapes"].append(cropped_shape)
            a = pooled
        flat = a.reshape(a.shape[0], -1)
        cache["flat"] = flat
        cache["pooled_shape"] = a.shape
        logits = flat @ self.dense_weight + self.dense_bias
        return softmax(logits), cache

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.forward(X)[0]

    def backward(self, cache, probs, y_onehot: np.ndarray, l2: float = 0.0):
        batch = y_onehot.shape[0]
        delta = (probs - y_onehot) / batch
        grads = {
            "dense_weight": cache["flat"].T @ delta + l2 * self.dense_weight,
            "dense_bias": delta.sum(axis=0),
        }
        dflat = delta @ self.dense_weight.T
        da = dflat.reshape(cache["pooled_shape"])
        for i in range(len(self.kernels) - 1, -1, -1):
            act = cache["activations"][i]
            dact = _maxpool_backward(da, act, cache["pool_shapes"][i], self.pool_size)
            dz = dact * act * (1.0 - act)
            cols = cache["cols"][i]
            k = cols.shape[-1]
            grads[f"kernel{i}"] = (
                cols.reshape(-1, k).T @ dz.reshape(-1, dz.shape[-1]) + l2 * self.kernels[i]
            )
            grads[f"conv_bias{i}"] = dz.sum(axis=(0, 1, 2))
            if i > 0:
                dcols = dz @ self.kernels[i].T
                da = _col2im(dcols, cache["inputs"][i].shape, self.kernel_size,
                             self.kernel_size)
        return grads

    def parameters(self):
        out = []
        for i, (kernel, bias) in enumerate(zip(self.kernels, self.conv_biases)):
            out.append((f"kernel{i}", kernel))
            out.append((f"conv_bias{i}", bias))
        out.append(("dense_weight", self.dense_weight))
        out.append(("dense_bias", self.dense_bias))
        return out

    def gradient_step(self, X, y_onehot, lr: float, l2: float = 0.0):
        probs, cache = self.forward(X)
        grads = self.backward(cache, probs, y_onehot, l2)
        for name, array in self.parameters():
            array -= lr * grads[name]

    def gradients(self, X, y_onehot, l2: float = 0.0):
        probs, cache = self.forward(X)
        grads = self.backward(cache, probs, y_onehot, l2)
        return [(name, grads[name]) for name, _ in self.parameters()]
