"""Spectrum and dataset data model.

Storage convention: ``intensity[i, j]`` is the signal at retention index ``i``
and drift index ``j``; rows run along retention time, columns along drift
time. A full-resolution instrument sample is therefore ``(3150, 4080)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

DRIFT = "drift_time"
RETENTION = "retention_time"


class SampleLabel(str, enum.Enum):
    INFECTED = "Infected"
    NOT_INFECTED = "NotInfected"

    @property
    def code(self) -> int:
        """1 for Infected (the positive class), 0 otherwise."""
        return 1 if self is SampleLabel.INFECTED else 0

    @classmethod
    def from_code(cls, code: int) -> "SampleLabel":
        return cls.INFECTED if int(code) == 1 else cls.NOT_INFECTED


@dataclass(frozen=True)
class Axis:
    """Uniformly sampled axis: values are ``start + i * step`` for ``i < count``.

    Units are milliseconds for drift time and seconds for retention time.
    """

    name: str
    start: float
    step: float
    count: int

    def __post_init__(self):
        if self.name not in (DRIFT, RETENTION):
            raise ValueError(f"axis name must be {DRIFT!r} or {RETENTION!r}, got {self.name!r}")
        if not np.isfinite(self.start) or not np.isfinite(self.step):
            raise ValueError("axis start and step must be finite")
        if not self.step > 0:
            raise ValueError(f"axis step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError(f"axis count must be an integer >= 2, got {self.count}")
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "count", int(self.count))

    @property
    def values(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    def to_dict(self) -> dict:
        return {"name": self.name, "start": self.start, "step": self.step, "count": self.count}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Axis":
        return cls(name=d["name"], start=d["start"], step=d["step"], count=d["count"])


@dataclass(frozen=True, eq=False)
class IMSSpectrum:
    """One GC-IMS measurement.

    The intensity array is copied to float64 and made read-only on
    construction. NaN/Inf are tolerated here so that measurement validation
    can report them; downstream processing assumes a validated spectrum.
    """

    drift_axis: Axis
    retention_axis: Axis
    intensity: np.ndarray
    sample_id: str = ""

    def __post_init__(self):
        if self.drift_axis.name != DRIFT or self.retention_axis.name != RETENTION:
            raise ValueError("drift_axis/retention_axis carry the wrong axis names")
        arr = np.array(self.intensity, dtype=np.float64, copy=True)
        expected = (self.retention_axis.count, self.drift_axis.count)
        if arr.shape != expected:
            raise ValueError(f"intensity shape {arr.shape} does not match axes {expected}")
        arr.flags.writeable = False
        object.__setattr__(self, "intensity", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return spectrum_shape(self)

    def with_intensity(self, intensity, drift_axis: Optional[Axis] = None,
                       retention_axis: Optional[Axis] = None) -> "IMSSpectrum":
        return IMSSpectrum(drift_axis or self.drift_axis, retention_axis or self.retention_axis,
                           intensity, self.sample_id)

    def same_axes(self, other: "IMSSpectrum") -> bool:
        return self.drift_axis == other.drift_axis and self.retention_axis == other.retention_axis

    def __eq__(self, other):
        if not isinstance(other, IMSSpectrum):
            return NotImplemented
        return (self.sample_id == other.sample_id and self.same_axes(other)
                and np.array_equal(self.intensity, other.intensity, equal_nan=True))

    __hash__ = None


@dataclass(frozen=True)
class SampleRecord:
    """Clinical report metadata for one sample.

    Range and category rules (``0 <= age < 100``, sex in {male, female}) are
    checked by :func:`gcims.validation.validate_record`, not here, so that a
    bad record can be reported instead of crashing ingestion.
    """

    sample_id: str
    age: int
    sex: str
    site: str
    collected_on: str
    label: Optional[SampleLabel] = None


@dataclass(frozen=True)
class Dataset:
    records: tuple
    spectra: Mapping[str, IMSSpectrum] = field(repr=False)

    def __post_init__(self):
        records = tuple(self.records)
        ids = [r.sample_id for r in records]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate sample_id in dataset records")
        spectra = dict(self.spectra)
        reference = None
        for sid in ids:
            if sid not in spectra:
                raise ValueError(f"record {sid!r} has no spectrum")
            if reference is None:
                reference = spectra[sid]
            elif not spectra[sid].same_axes(reference):
                raise ValueError(f"spectrum {sid!r} has axes differing from {reference.sample_id!r}")
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "spectra", {sid: spectra[sid] for sid in ids})

    def __len__(self) -> int:
        return len(self.records)

    @property
    def sample_ids(self) -> list[str]:
        return [r.sample_id for r in self.records]

    def labels(self) -> np.ndarray:
        """Integer label vector (1 = Infected); raises if any record is unlabeled."""
        from .errors import UnlabeledSamples

        missing = [r.sample_id for r in self.records if r.label is None]
        if missing:
            raise UnlabeledSamples(f"{len(missing)} unlabeled samples, e.g. {missing[0]!r}")
        return np.array([r.label.code for r in self.records], dtype=np.int64)

    def spectra_list(self) -> list[IMSSpectrum]:
        return [self.spectra[sid] for sid in self.sample_ids]


def spectrum_shape(spectrum: IMSSpectrum) -> tuple[int, int]:
    """(retention count, drift count)."""
    return spectrum.retention_axis.count, spectrum.drift_axis.count


def flatten(spectrum: IMSSpectrum) -> np.ndarray:
    """Row-major (retention-major) feature vector of length rows*cols."""
    return spectrum.intensity.reshape(-1).copy()


def reshape(vector: np.ndarray, like: IMSSpectrum) -> IMSSpectrum:
    """Inverse of :func:`flatten` using the axes of ``like``."""
    vector = np.asarray(vector, dtype=np.float64)
    return like.with_intensity(vector.reshape(spectrum_shape(like)))


def stack_flat(spectra: Sequence[IMSSpectrum]) -> np.ndarray:
    return np.vstack([s.intensity.reshape(1, -1) for s in spectra])
