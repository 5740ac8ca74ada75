"""Seeded synthetic GC-IMS datasets with a controllable class difference.

Each spectrum is a sum of axis-aligned 2D Gaussian peaks on a smooth
baseline plus white noise. The baseline is a constant pedestal of five noise
standard deviations plus a random bilinear drift bounded by
``baseline_drift``; negative cells stay rare but are not clipped.

All samples share the same set of "common" peaks (amplitude jitter +-10%,
center jitter +-1 cell). Infected samples add a small
set of biomarker peaks whose amplitude is multiplied by ``separation``.

Random streams are keyed so that a non-infected sample is bit-identical for
every ``separation`` value: the biomarker draws are consumed for every
sample whatever its label.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import DRIFT, RETENTION, Axis, Dataset, IMSSpectrum, SampleLabel, SampleRecord
from .errors import ConfigInvalid
from .imsx import write_imsx
from .metadata import METADATA_FILENAME, write_metadata
from .seeding import derive_rng

RETENTION_STEP_S = 1.0
DRIFT_STEP_MS = 0.025
DRIFT_START_MS = 5.0
SITES = ("site-A", "site-B", "site-C")
# constant background offset, in units of noise_sigma
PEDESTAL_SIGMAS = 5.0

# stream tags for derive_rng
_LAYOUT, _LABELS, _SAMPLE = 1, 2, 3


@dataclass(frozen=True)
class SynthConfig:
    n_samples: int = 76
    rows: int = 315
    cols: int = 408
    n_common_peaks: int = 12
    n_biomarker_peaks: int = 3
    separation: float = 1.0
    noise_sigma: float = 0.02
    baseline_drift: float = 0.03
    infected_fraction: float = 0.5
    seed: int = 42

    def __post_init__(self):
        problems = []
        for name in ("n_samples", "rows", "cols", "n_common_peaks", "n_biomarker_peaks", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                problems.append(f"{name} must be an integer")
        if self.n_samples < 1:
            problems.append("n_samples must be >= 1")
        if self.rows < 8 or self.cols < 8:
            problems.append("rows and cols must be >= 8")
        if self.n_common_peaks < 0 or self.n_biomarker_peaks < 0:
            problems.append("peak counts must be >= 0")
        for name in ("separation", "noise_sigma", "baseline_drift"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                problems.append(f"{name} must be finite and >= 0")
        if not 0 <= self.infected_fraction <= 1:
            problems.append("infected_fraction must lie in [0, 1]")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must be a 64-bit unsigned integer")
        if problems:
            raise ConfigInvalid("; ".join(problems))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class _Peak:
    row: float
    col: float
    sigma_row: float
    sigma_col: float
    amplitude: float


def _layout(config: SynthConfig) -> tuple[list, list]:
    rng = derive_rng(config.seed, _LAYOUT)
    # centres stay at least 6 cells (a quarter of the axis on tiny grids) from the edge
    mr = min(6.0, (config.rows - 1) / 4)
    mc = min(6.0, (config.cols - 1) / 4)

    def draw(n, amp_low, amp_high):
        return [_Peak(row=rng.uniform(mr, config.rows - 1 - mr),
                      col=rng.uniform(mc, config.cols - 1 - mc),
                      sigma_row=rng.uniform(2.0, 6.0),
                      sigma_col=rng.uniform(1.5, 4.0),
                      amplitude=rng.uniform(amp_low, amp_high))
                for _ in range(n)]

    common = draw(config.n_common_peaks, 0.3, 1.0)
    biomarkers = draw(config.n_biomarker_peaks, 0.08, 0.15)
    return common, biomarkers


def split_counts(n: int, fraction: float) -> tuple[int, int]:
    """Largest-remainder split of ``n`` into (first, second) with ``first ~ n*fraction``.

    An exact tie in remainders goes to the first group.
    """
    a, b = n * fraction, n * (1 - fraction)
    fa, fb = int(np.floor(a)), int(np.floor(b))
    spare = n - fa - fb
    if spare:
        if (a - fa) >= (b - fb):
            fa += spare
        else:
            fb += spare
    return fa, fb


def _labels(config: SynthConfig) -> np.ndarray:
    n_inf, _ = split_counts(config.n_samples, config.infected_fraction)
    codes = np.zeros(config.n_samples, dtype=np.int64)
    codes[:n_inf] = 1
    derive_rng(config.seed, _LABELS).shuffle(codes)
    return codes


def _add_peak(canvas, r, c, peak: _Peak, row_shift, col_shift, amplitude):
    gr = np.exp(-0.5 * ((r - (peak.row + row_shift)) / peak.sigma_row) ** 2)
    gc = np.exp(-0.5 * ((c - (peak.col + col_shift)) / peak.sigma_col) ** 2)
    canvas += amplitude * np.outer(gr, gc)


def _sample_intensity(config: SynthConfig, index: int, infected: bool, common, biomarkers) -> np.ndarray:
    rng = derive_rng(config.seed, _SAMPLE, index)
    r = np.arange(config.rows, dtype=np.float64)
    c = np.arange(config.cols, dtype=np.float64)
    signal = np.zeros((config.rows, config.cols))
    for peak in common:
        jitter = rng.uniform(0.9, 1.1)
        dr, dc = rng.uniform(-1.0, 1.0, size=2)
        _add_peak(signal, r, c, peak, dr, dc, peak.amplitude * jitter)
    marker = np.zeros_like(signal)
    for peak in biomarkers:
        jitter = rng.uniform(0.9, 1.1)
        dr, dc = rng.uniform(-1.0, 1.0, size=2)
        _add_peak(marker, r, c, peak, dr, dc, peak.amplitude * jitter)
    coeffs = rng.uniform(-1.0, 1.0, size=3)
    u = np.linspace(-1.0, 1.0, config.rows)[:, None]
    v = np.linspace(-1.0, 1.0, config.cols)[None, :]
    # |drift| <= baseline_drift everywhere
    drift = config.baseline_drift * (coeffs[0] * u + coeffs[1] * v + coeffs[2] * u * v) / 3.0
    noise = rng.standard_normal((config.rows, config.cols)) * config.noise_sigma
    total = signal + (PEDESTAL_SIGMAS * config.noise_sigma + drift) + noise
    if infected:
        total = total + config.separation * marker
    return total


def axes_for(config: SynthConfig) -> tuple[Axis, Axis]:
    return (Axis(DRIFT, DRIFT_START_MS, DRIFT_STEP_MS, config.cols),
            Axis(RETENTION, 0.0, RETENTION_STEP_S, config.rows))


def sample_id_for(index: int) -> str:
    return f"S{index + 1:03d}"


def generate(config: SynthConfig) -> Dataset:
    """Build a labeled dataset fully determined by ``config``.

    Intensities are rounded to float32 so that a dataset written to disk and
    read back is identical to the in-memory one.
    """
    common, biomarkers = _layout(config)
    codes = _labels(config)
    drift_axis, retention_axis = axes_for(config)
    meta_rng = derive_rng(config.seed, _LABELS, 1)
    ages = meta_rng.integers(18, 100, size=config.n_samples)
    start = dt.date(2024, 1, 8)
    records, spectra = [], {}
    for i in range(config.n_samples):
        sid = sample_id_for(i)
        intensity = _sample_intensity(config, i, bool(codes[i]), common, biomarkers)
        intensity = intensity.astype(np.float32).astype(np.float64)
        spectra[sid] = IMSSpectrum(drift_axis, retention_axis, intensity, sid)
        records.append(SampleRecord(
            sample_id=sid,
            age=int(ages[i]),
            sex="male" if i % 2 == 0 else "female",
            site=SITES[i % len(SITES)],
            collected_on=(start + dt.timedelta(days=i)).isoformat(),
            label=SampleLabel.from_code(codes[i]),
        ))
    return Dataset(tuple(records), spectra)


REFERENCE_CONFIG = SynthConfig(seed=42, separation=1.0)

REFERENCE_BOUNDS = {
    "min_test_accuracy": {"random_forest": 0.75, "svm": 0.75, "plsda": 0.75},
    "at_least_as_accurate_as": "decision_tree",
    "max_runtime_seconds": 300.0,
}


def reference_benchmark() -> tuple[Dataset, dict]:
    """The fixed benchmark dataset (seed 42, defaults) and its acceptance bounds."""
    return generate(REFERENCE_CONFIG), {k: (dict(v) if isinstance(v, dict) else v)
                                        for k, v in REFERENCE_BOUNDS.items()}


def write_dataset(dataset: Dataset, out_dir) -> list[Path]:
    """Write one IMSX file per sample plus ``metadata.csv``; return the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for record in dataset.records:
        path = out_dir / f"{record.sample_id}.imsx"
        write_imsx(dataset.spectra[record.sample_id], path, label=record.label)
        paths.append(path)
    meta = out_dir / METADATA_FILENAME
    write_metadata(dataset.records, meta)
    paths.append(meta)
    return paths
