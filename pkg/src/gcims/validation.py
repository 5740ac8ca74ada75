"""Quality checks on measurements and clinic records, and gated dataset loading."""

from __future__ import annotations

import datetime as dt
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .core import Dataset, IMSSpectrum, SampleRecord
from .errors import DataError, NoValidSamples
from .imsx import read_imsx
from .metadata import read_metadata

log = logging.getLogger(__name__)

NEGATIVE_TOLERANCE = 0.01
SEX_CATEGORIES = ("male", "female")
MAX_AGE = 100  # exclusive


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    message: str = ""


@dataclass(frozen=True)
class ValidationReport:
    sample_id: str
    checks: tuple

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def merged(self, other: "ValidationReport") -> "ValidationReport":
        return ValidationReport(self.sample_id, self.checks + other.checks)

    def summary_line(self) -> str:
        if self.overall:
            return f"{self.sample_id} PASS"
        details = "; ".join(f"{c.name}: {c.message}" if c.message else c.name
                            for c in self.checks if not c.passed)
        return f"{self.sample_id} FAIL {','.join(self.failed)} ({details})"


def validate_measurement(spectrum: IMSSpectrum) -> ValidationReport:
    data = spectrum.intensity
    checks = []

    n_bad = int(np.count_nonzero(~np.isfinite(data)))
    checks.append(Check("finite_values", n_bad == 0,
                        f"{n_bad} non-finite cells" if n_bad else ""))

    monotonic = all(np.all(np.diff(ax.values) > 0)
                    for ax in (spectrum.drift_axis, spectrum.retention_axis))
    checks.append(Check("axes_monotonic", bool(monotonic), "" if monotonic else "axis values not increasing"))

    expected = (spectrum.retention_axis.count, spectrum.drift_axis.count)
    checks.append(Check("dims_match_header", data.shape == expected,
                        "" if data.shape == expected else f"shape {data.shape} vs header {expected}"))

    frac = float(np.count_nonzero(data < 0)) / data.size
    checks.append(Check("nonnegative_fraction", frac <= NEGATIVE_TOLERANCE,
                        f"negative fraction {frac:.6f} (tolerance {NEGATIVE_TOLERANCE})"))
    return ValidationReport(spectrum.sample_id, tuple(checks))


def validate_record(record: SampleRecord) -> ValidationReport:
    checks = []
    age_ok = isinstance(record.age, (int, np.integer)) and 0 <= record.age < MAX_AGE
    checks.append(Check("age_range", bool(age_ok),
                        "" if age_ok else f"age {record.age!r} outside [0, {MAX_AGE})"))
    sex_ok = record.sex in SEX_CATEGORIES
    checks.append(Check("sex_category", sex_ok,
                        "" if sex_ok else f"sex {record.sex!r} not in {SEX_CATEGORIES}"))
    id_ok = bool(record.sample_id and record.sample_id.strip())
    checks.append(Check("id_nonempty", id_ok, "" if id_ok else "empty sample_id"))
    try:
        dt.date.fromisoformat(record.collected_on)
        date_ok, msg = True, ""
    except (TypeError, ValueError):
        date_ok, msg = False, f"collected_on {record.collected_on!r} is not an ISO-8601 date"
    checks.append(Check("date_parseable", date_ok, msg))
    return ValidationReport(record.sample_id, tuple(checks))


def spectrum_path(spectra_dir: Union[str, os.PathLike], sample_id: str) -> Path:
    return Path(spectra_dir) / f"{sample_id}.imsx"


def validate_directory(spectra_dir, metadata_path):
    """Validate every metadata row together with its spectrum file.

    Returns ``(records, spectra, reports)`` where ``spectra`` maps sample ids
    to the spectra that could be read, and ``reports`` has one combined
    record+measurement report per metadata row, in file order. Raises
    :class:`MissingMetadataFile` when the metadata file does not exist.
    """
    records = read_metadata(metadata_path)
    spectra: dict[str, IMSSpectrum] = {}
    reports: list[ValidationReport] = []
    reference = None
    for record in records:
        report = validate_record(record)
        path = spectrum_path(spectra_dir, record.sample_id)
        try:
            spectrum = read_imsx(path) if record.sample_id else None
        except FileNotFoundError:
            spectrum = None
            report = report.merged(ValidationReport(record.sample_id, (
                Check("spectrum_readable", False, f"missing file {path.name}"),)))
        except DataError as exc:
            spectrum = None
            report = report.merged(ValidationReport(record.sample_id, (
                Check("spectrum_readable", False, f"{type(exc).__name__}: {exc}"),)))
        if spectrum is not None:
            report = report.merged(validate_measurement(spectrum))
            extra = []
            if spectrum.sample_id != record.sample_id:
                extra.append(Check("header_id_match", False,
                                   f"file header names {spectrum.sample_id!r}"))
            if reference is not None and not spectrum.same_axes(reference):
                extra.append(Check("axes_consistent", False,
                                   f"axes differ from {reference.sample_id!r}"))
            if extra:
                report = report.merged(ValidationReport(record.sample_id, tuple(extra)))
            spectra[record.sample_id] = spectrum
            if reference is None and report.overall:
                reference = spectrum
        reports.append(report)
    return records, spectra, reports


def load_dataset(spectra_dir, metadata_path) -> tuple[Dataset, list[ValidationReport]]:
    """Load the samples whose record AND measurement pass every check.

    A sample with a failing clinic record is excluded even when its spectrum
    is clean.
    """
    records, spectra, reports = validate_directory(spectra_dir, metadata_path)
    keep = [rec for rec, rep in zip(records, reports) if rep.overall]
    for rep in reports:
        if not rep.overall:
            log.warning("excluding %s", rep.summary_line())
    if not keep:
        raise NoValidSamples(f"no valid samples in {spectra_dir} / {metadata_path}")
    dataset = Dataset(tuple(keep), {r.sample_id: spectra[r.sample_id] for r in keep})
    return dataset, reports
