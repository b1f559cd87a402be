"""Figure rendering for the CLI report paths.

Everything draws to files via the Agg backend so reports work headless;
figures land next to the delimited outputs the commands write.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .audio import AudioClip

PHASE_COLORS = {"explosive": "#d62728", "intermediate": "#ff7f0e", "voiced": "#2ca02c"}


def save_waveform_figure(clip: AudioClip, segments: list[dict], path) -> str:
    """Waveform with shaded segment spans and phase bands."""
    fig, ax = plt.subplots(figsize=(10, 3.2))
    t = np.arange(len(clip)) / clip.sample_rate_hz
    ax.plot(t, clip.samples, linewidth=0.4, color="#1f77b4")
    for seg in segments:
        for phase in seg.get("phases", []):
            ax.axvspan(phase["start_ms"] / 1000.0, phase["end_ms"] / 1000.0,
                       color=PHASE_COLORS.get(phase["name"], "#999999"), alpha=0.25)
        ax.axvline(seg["start_ms"] / 1000.0, color="k", linewidth=0.8, linestyle="--")
        ax.axvline(seg["end_ms"] / 1000.0, color="k", linewidth=0.8, linestyle="--")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("amplitude")
    ax.set_title(f"{len(segments)} cough segment(s)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_spectrogram_figure(matrix: np.ndarray, path, frame_ms: float = 25.0) -> str:
    """Log-mel spectrogram image, time on x, mel band on y."""
    matrix = np.asarray(matrix)
    fig, ax = plt.subplots(figsize=(8, 3.5))
    extent = (0.0, matrix.shape[0] * frame_ms / 1000.0, 0, matrix.shape[1])
    im = ax.imshow(matrix.T, origin="lower", aspect="auto", extent=extent,
                   cmap="magma")
    fig.colorbar(im, ax=ax, label="log energy")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("mel band")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_membership_figure(memberships: dict, path) -> str:
    """Per-class membership bars (they sum to 1)."""
    names = list(memberships)
    values = [memberships[n] for n in names]
    fig, ax = plt.subplots(figsize=(5, 3))
    bars = ax.bar(names, values, color="#1f77b4")
    for bar, value in zip(bars, values):
        ax.text(bar.get_x() + bar.get_width() / 2, value + 0.01, f"{value:.0%}",
                ha="center", fontsize=9)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("membership")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_loss_curve(losses, path) -> str:
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(range(1, len(losses) + 1), losses)
    ax.set_xlabel("epoch")
    ax.set_ylabel("training loss")
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def save_confusion_figure(confusion: np.ndarray, class_names, path) -> str:
    confusion = np.asarray(confusion)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.imshow(confusion, cmap="Blues")
    for i in range(confusion.shape[0]):
        for j in range(confusion.shape[1]):
            ax.text(j, i, str(confusion[i, j]), ha="center", va="center")
    ax.set_xticks(range(len(class_names)), class_names, rotation=30, ha="right")
    ax.set_yticks(range(len(class_names)), class_names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)
