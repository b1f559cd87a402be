"""Portable model file format.

Layout (all integers little-endian):

    bytes 0..5    magic "CPOCM1"
    bytes 6..9    uint32 header length N
    bytes 10..    N bytes of UTF-8 JSON header
    remainder     float64 little-endian parameter blocks, concatenated in
                  the order listed under header["params"]

The header is self-describing: format_version, model_type ("mlp"/"cnn"),
architecture, class_names, optional normalizer (mean/std lists), and the
name+shape of every parameter block.  Any implementation can read the file
from this description alone.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import ModelFormatError
from ..features import Normalizer
from .cnn import CnnModel
from .mlp import MlpModel

MAGIC = b"CPOCM1"
FORMAT_VERSION = 1


def _architecture(model) -> dict:
    if isinstance(model, MlpModel):
        return {"layer_sizes": list(model.layer_sizes)}
    if isinstance(model, CnnModel):
        return {
            "input_shape": list(model.input_shape),
            "conv_channels": list(model.conv_channels),
            "kernel_size": model.kernel_size,
            "pool_size": model.pool_size,
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def save_model(model, path) -> None:
    params = model.parameters()
    header = {
        "format_version": FORMAT_VERSION,
        "model_type": "mlp" if isinstance(model, MlpModel) else "cnn",
        "architecture": _architecture(model),
        "class_names": list(model.class_names),
        "normalizer": None
        if model.normalizer is None
        else {"mean": model.normalizer.mean.tolist(), "std": model.normalizer.std.tolist()},
        "params": [{"name": name, "shape": list(array.shape)} for name, array in params],
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, array in params:
            fh.write(array.astype("<f8").tobytes())


def load_model(path):
    """Rebuild a model from its file; raises ModelFormatError on anything
    that does not parse as a well-formed CPOCM1 file."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC) + 4 or data[: len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"{path}: missing {MAGIC.decode()} magic bytes")
    header_len = struct.unpack("<I", data[len(MAGIC) : len(MAGIC) + 4])[0]
    header_end = len(MAGIC) + 4 + header_len
    if header_end > len(data):
        raise ModelFormatError(f"{path}: truncated header")
    try:
        header = json.loads(data[len(MAGIC) + 4 : header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: unreadable header ({exc})") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format version {header.get('format_version')}"
        )

    arrays = {}
    offset = header_end
    for spec in header["params"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * 8
        if end > len(data):
            raise ModelFormatError(f"{path}: truncated parameter block {spec['name']}")
        arrays[spec["name"]] = np.frombuffer(
            data[offset:end], dtype="<f8"
        ).reshape(shape).copy()
        offset = end
    if offset != len(data):
        raise ModelFormatError(f"{path}: trailing bytes after parameter blocks")

    normalizer = None
    if header.get("normalizer"):
        normalizer = Normalizer(
            mean=np.array(header["normalizer"]["mean"], dtype=np.float64),
            std=np.array(header["normalizer"]["std"], dtype=np.float64),
        )

    arch = header["architecture"]
    class_names = tuple(header["class_names"])
    try:
        if header["model_type"] == "mlp":
            sizes = arch["layer_sizes"]
            n_layers = len(sizes) - 1
            model = MlpModel(
                layer_sizes=tuple(sizes),
                weights=[arrays[f"W{i}"] for i in range(n_layers)],
                biases=[arrays[f"b{i}"] for i in range(n_layers)],
                class_names=class_names,
                normalizer=normalizer,
            )
        elif header["model_type"] == "cnn":
            n_conv = len(arch["conv_channels"])
            model = CnnModel(
                input_shape=tuple(arch["input_shape"]),
                conv_channels=tuple(arch["conv_channels"]),
                kernel_size=arch["kernel_size"],
                pool_size=arch["pool_size"],
                kernels=[arrays[f"kernel{i}"] for i in range(n_conv)],
                conv_biases=[arrays[f"conv_bias{i}"] for i in range(n_conv)],
                dense_weight=arrays["dense_weight"],
                dense_bias=arrays["dense_bias"],
                class_names=class_names,
                normalizer=normalizer,
            )
        else:
            raise ModelFormatError(f"{path}: unknown model type {header['model_type']!r}")
    except KeyError as exc:
        raise ModelFormatError(f"{path}: header is missing {exc}") from exc
    return model
