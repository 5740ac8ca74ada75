"""Rendering: bit-exact PGM images of spectra and matplotlib report figures."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import IMSSpectrum


def _scale_to_bytes(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if not hi > lo:
        return np.zeros(values.shape, dtype=np.uint8)
    scaled = np.floor((values - lo) / (hi - lo) * 255.0 + 0.5)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def display_values(spectrum: IMSSpectrum, log: bool = False) -> np.ndarray:
    """Intensities as drawn: raw, or log10(1 + x) with negatives clipped to 0."""
    data = spectrum.intensity
    if log:
        data = np.log10(1.0 + np.maximum(data, 0.0))
    return data


def render_pgm(spectrum: IMSSpectrum, log: bool = False) -> bytes:
    """Binary PGM (P5, maxval 255): one pixel per cell, drift time across,
    retention time down. min maps to 0 and max to 255; a constant image is
    all zeros."""
    pixels = _scale_to_bytes(display_values(spectrum, log))
    height, width = pixels.shape
    return f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes()


def write_pgm(spectrum: IMSSpectrum, path, log: bool = False) -> int:
    data = render_pgm(spectrum, log)
    Path(path).write_bytes(data)
    return len(data)


# --- matplotlib figures -------------------------------------------------------------

_PNG_METADATA = {"Software": None}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _extent(spectrum: IMSSpectrum):
    d, r = spectrum.drift_axis, spectrum.retention_axis
    return (d.start, d.start + d.step * (d.count - 1), r.start + r.step * (r.count - 1), r.start)


def plot_spectra(spectra: Sequence[IMSSpectrum], path, titles: Optional[Sequence[str]] = None,
                 log: bool = True) -> Path:
    """Heat maps of one or more spectra side by side (e.g. one per class)."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(spectra), figsize=(5.5 * len(spectra), 4.5), squeeze=False)
    for i, (ax, s) in enumerate(zip(axes[0], spectra)):
        im = ax.imshow(display_values(s, log), aspect="auto", extent=_extent(s), cmap="viridis")
        ax.set_xlabel("drift time (ms)")
        ax.set_ylabel("retention time (s)")
        ax.set_title(titles[i] if titles else s.sample_id)
        fig.colorbar(im, ax=ax, label="log10(1 + intensity)" if log else "intensity")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=100, metadata=_PNG_METADATA)
    plt.close(fig)
    return path


def plot_accuracy(report, path) -> Path:
    """Grouped bars of CV mean accuracy (with fold std) and held-out test accuracy."""
    plt = _pyplot()
    names = [r.algorithm for r in report.rows]
    x = np.arange(len(names))
    cv = [r.cv_mean_accuracy for r in report.rows]
    cv_err = [r.cv_std for r in report.rows]
    test = [r.test.accuracy for r in report.rows]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.6 * len(names)), 4.0))
    ax.bar(x - 0.2, cv, 0.4, yerr=cv_err, capsize=3, label="CV mean", color="#8da0cb")
    ax.bar(x + 0.2, test, 0.4, label="test", color="#fc8d62")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("accuracy")
    ax.set_title(f"seed {report.seed}")
    ax.legend(loc="lower right")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=100, metadata=_PNG_METADATA)
    plt.close(fig)
    return path
