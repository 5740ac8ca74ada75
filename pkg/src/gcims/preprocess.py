"""Spectrum preprocessing steps and an ordered pipeline over them.

Steps: impulse-noise removal (despike), Gaussian smoothing, per-row
percentile baseline removal, TIC/max normalization and block-mean binning.
All steps are pure functions returning a new :class:`IMSSpectrum`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .core import Axis, IMSSpectrum
from .errors import ConfigInvalid, DegenerateSpectrum, WindowTooLarge

SPIKE_SIGMAS = 5.0
SMOOTH_TRUNCATE = 3.0


def _neighbourhood_footprint(window: int) -> np.ndarray:
    footprint = np.ones((window, window), dtype=bool)
    footprint[window // 2, window // 2] = False
    return footprint


def despike(spectrum: IMSSpectrum, window: int = 3) -> IMSSpectrum:
    """Replace impulse outliers by their neighbourhood median.

    The neighbourhood of a cell is its ``window x window`` block without the
    cell itself. Edges are mirrored about the edge cell (not duplicating it),
    so a spike on the border never sees a copy of itself. A cell is replaced when it exceeds
    the neighbourhood median by more than 5 neighbourhood standard deviations
    (population std). Other cells are returned unchanged.
    """
    if int(window) != window or window < 3 or window % 2 == 0:
        raise ConfigInvalid(f"despike window must be an odd integer >= 3, got {window}")
    window = int(window)
    data = spectrum.intensity
    if window > min(data.shape):
        raise WindowTooLarge(f"window {window} exceeds smallest dimension {min(data.shape)}")
    footprint = _neighbourhood_footprint(window)
    kernel = footprint / footprint.sum()
    # w*w - 1 neighbours is always even: average the two middle order statistics
    half = footprint.sum() // 2
    median = 0.5 * (ndimage.rank_filter(data, half - 1, footprint=footprint, mode="mirror")
                    + ndimage.rank_filter(data, half, footprint=footprint, mode="mirror"))
    mean = ndimage.correlate(data, kernel, mode="mirror")
    mean_sq = ndimage.correlate(data * data, kernel, mode="mirror")
    std = np.sqrt(np.maximum(mean_sq - mean * mean, 0.0))
    spikes = (data - median) > SPIKE_SIGMAS * std
    out = np.where(spikes, median, data)
    return spectrum.with_intensity(out)


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalized Gaussian taps truncated at 3 sigma (radius rounded half up)."""
    radius = int(SMOOTH_TRUNCATE * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


def smooth(spectrum: IMSSpectrum, sigma: float = 1.0) -> IMSSpectrum:
    """Separable 2D Gaussian smoothing with reflected edges."""
    if not sigma > 0:
        raise ConfigInvalid(f"smooth sigma must be positive, got {sigma}")
    out = ndimage.gaussian_filter(spectrum.intensity, sigma=float(sigma),
                                  mode="reflect", truncate=SMOOTH_TRUNCATE)
    return spectrum.with_intensity(out)


def nearest_rank(values: np.ndarray, percentile: float, axis: int = -1) -> np.ndarray:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (rank >= 1)."""
    values = np.asarray(values)
    n = values.shape[axis]
    rank = max(1, math.ceil(percentile / 100.0 * n))
    return np.take(np.sort(values, axis=axis), rank - 1, axis=axis)


def baseline(spectrum: IMSSpectrum, percentile: float = 10.0) -> IMSSpectrum:
    """Subtract each retention row's nearest-rank percentile along drift time."""
    if not 0 <= percentile <= 50:
        raise ConfigInvalid(f"baseline percentile must lie in [0, 50], got {percentile}")
    data = spectrum.intensity
    background = nearest_rank(data, percentile, axis=1)
    return spectrum.with_intensity(data - background[:, None])


def normalize(spectrum: IMSSpectrum, mode: str = "tic") -> IMSSpectrum:
    data = spectrum.intensity
    if not np.any(data > 0):
        raise DegenerateSpectrum(f"{spectrum.sample_id or 'spectrum'}: no positive cells")
    if mode == "tic":
        scale = float(data.sum())
        if not scale > 0:
            raise DegenerateSpectrum(f"{spectrum.sample_id or 'spectrum'}: total intensity {scale} <= 0")
    elif mode == "max":
        scale = float(data.max())
    else:
        raise ConfigInvalid(f"normalize mode must be 'tic' or 'max', got {mode!r}")
    return spectrum.with_intensity(data / scale)


def block_mean(data: np.ndarray, factor_rows: int, factor_cols: int) -> np.ndarray:
    """Non-overlapping block means; trailing partial blocks average what they hold."""
    data = np.asarray(data, dtype=np.float64)
    rows, cols = data.shape
    row_starts = np.arange(0, rows, factor_rows)
    col_starts = np.arange(0, cols, factor_cols)
    sums = np.add.reduceat(np.add.reduceat(data, row_starts, axis=0), col_starts, axis=1)
    row_sizes = np.diff(np.append(row_starts, rows))
    col_sizes = np.diff(np.append(col_starts, cols))
    return sums / np.outer(row_sizes, col_sizes)


def bin(spectrum: IMSSpectrum, factor_rows: int = 1, factor_cols: int = 1) -> IMSSpectrum:
    """Block-mean pooling of ``factor_rows x factor_cols`` cells.

    Axis steps scale by the factor and counts by ceiling division. The axis
    start is kept. A result with fewer than two rows or columns is not a
    valid spectrum and raises :class:`ConfigInvalid`; use :func:`block_mean`
    for bare arrays.
    """
    for f in (factor_rows, factor_cols):
        if int(f) != f or f < 1:
            raise ConfigInvalid(f"bin factors must be integers >= 1, got {factor_rows}, {factor_cols}")
    factor_rows, factor_cols = int(factor_rows), int(factor_cols)
    if factor_rows == 1 and factor_cols == 1:
        return spectrum
    rows, cols = spectrum.intensity.shape
    new_rows, new_cols = -(-rows // factor_rows), -(-cols // factor_cols)
    if new_rows < 2 or new_cols < 2:
        raise ConfigInvalid(f"binning {rows}x{cols} by ({factor_rows}, {factor_cols}) "
                            f"leaves {new_rows}x{new_cols}; each axis needs >= 2 cells")
    ra, da = spectrum.retention_axis, spectrum.drift_axis
    return spectrum.with_intensity(
        block_mean(spectrum.intensity, factor_rows, factor_cols),
        drift_axis=Axis(da.name, da.start, da.step * factor_cols, new_cols),
        retention_axis=Axis(ra.name, ra.start, ra.step * factor_rows, new_rows),
    )


# --- pipeline -----------------------------------------------------------------

STEP_NAMES = ("despike", "smooth", "baseline", "normalize", "bin")


@dataclass(frozen=True)
class Step:
    name: str
    params: tuple

    def __post_init__(self):
        if self.name not in STEP_NAMES:
            raise ConfigInvalid(f"unknown preprocessing step {self.name!r}")
        object.__setattr__(self, "params", tuple(self.params))
        _check_params(self.name, self.params)

    def apply(self, spectrum: IMSSpectrum) -> IMSSpectrum:
        return _STEP_FUNCS[self.name](spectrum, *self.params)

    def format_value(self) -> str:
        return ", ".join(_fmt(p) for p in self.params)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _check_params(name: str, params: tuple) -> None:
    try:
        if name == "despike":
            (window,) = params
            ok = isinstance(window, int) and window >= 3 and window % 2 == 1
        elif name == "smooth":
            (sigma,) = params
            ok = float(sigma) > 0 and math.isfinite(sigma)
        elif name == "baseline":
            (p,) = params
            ok = 0 <= float(p) <= 50
        elif name == "normalize":
            (mode,) = params
            ok = mode in ("tic", "max")
        else:
            fr, fc = params
            ok = isinstance(fr, int) and isinstance(fc, int) and fr >= 1 and fc >= 1
    except (TypeError, ValueError):
        ok = False
    if not ok:
        raise ConfigInvalid(f"invalid parameters for {name}: {params!r}")


_STEP_FUNCS = {
    "despike": despike,
    "smooth": smooth,
    "baseline": baseline,
    "normalize": normalize,
    "bin": bin,
}


@dataclass(frozen=True)
class PreprocessConfig:
    """Ordered preprocessing steps. An empty list is the identity pipeline."""

    steps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, Sequence]]) -> "PreprocessConfig":
        return cls(tuple(Step(name, tuple(params)) for name, params in pairs))

    def to_text(self) -> str:
        return "".join(f"{s.name} = {s.format_value()}\n" for s in self.steps)

    @classmethod
    def from_text(cls, text: str) -> "PreprocessConfig":
        steps = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, value = split_key_value(line, lineno)
            steps.append(parse_step(key, value, lineno))
        return cls(tuple(steps))

    def to_list(self) -> list:
        return [[s.name, list(s.params)] for s in self.steps]


def split_key_value(line: str, lineno: int) -> tuple[str, str]:
    if "=" not in line:
        raise ConfigInvalid(f"line {lineno}: expected 'key = value', got {line!r}")
    key, value = line.split("=", 1)
    return key.strip(), value.strip()


def parse_step(key: str, value: str, lineno: int = 0) -> Step:
    where = f"line {lineno}: " if lineno else ""
    parts = [p.strip() for p in value.split(",")] if value else []
    try:
        if key == "despike":
            params = (int(parts[0]),)
        elif key in ("smooth", "baseline"):
            params = (float(parts[0]),)
        elif key == "normalize":
            params = (parts[0],)
        elif key == "bin":
            fr = int(parts[0])
            params = (fr, int(parts[1]) if len(parts) > 1 else fr)
        else:
            raise ConfigInvalid(f"{where}unknown preprocessing step {key!r}")
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ConfigInvalid):
            raise
        raise ConfigInvalid(f"{where}bad value {value!r} for {key}") from None
    try:
        return Step(key, params)
    except ConfigInvalid as exc:
        raise ConfigInvalid(f"{where}{exc}") from None


DEFAULT_CONFIG = PreprocessConfig.from_pairs([
    ("despike", (3,)),
    ("smooth", (1.0,)),
    ("baseline", (10.0,)),
    ("normalize", ("tic",)),
    ("bin", (5, 4)),
])


def run_pipeline(spectrum: IMSSpectrum, config: PreprocessConfig) -> IMSSpectrum:
    for step in config.steps:
        spectrum = step.apply(spectrum)
    return spectrum
