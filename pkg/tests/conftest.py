import numpy as np
import pytest

from gcims.core import DRIFT, RETENTION, Axis, Dataset, IMSSpectrum, SampleLabel, SampleRecord
from gcims.synthgen import SynthConfig, generate


def make_spectrum(values, sample_id="X001", drift_start=5.0, retention_start=0.0):
    values = np.asarray(values, dtype=np.float64)
    rows, cols = values.shape
    return IMSSpectrum(Axis(DRIFT, drift_start, 0.025, cols),
                       Axis(RETENTION, retention_start, 1.0, rows),
                       values, sample_id)


def make_record(sample_id="X001", age=34, sex="female", label=SampleLabel.INFECTED,
                collected_on="2024-03-01", site="site-A"):
    return SampleRecord(sample_id, age, sex, site, collected_on, label)


def make_dataset(arrays, labels):
    records, spectra = [], {}
    for i, (a, lab) in enumerate(zip(arrays, labels)):
        sid = f"T{i:03d}"
        records.append(make_record(sid, label=SampleLabel.from_code(int(lab))))
        spectra[sid] = make_spectrum(a, sid)
    return Dataset(tuple(records), spectra)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_config():
    return SynthConfig(n_samples=24, rows=40, cols=48, separation=2.0, seed=5)


@pytest.fixture(scope="session")
def small_dataset(small_config):
    return generate(small_config)


@pytest.fixture(scope="session")
def small_dir(tmp_path_factory, small_dataset):
    from gcims.synthgen import write_dataset

    out = tmp_path_factory.mktemp("synth")
    write_dataset(small_dataset, out)
    return out


# acceptance criteria outcomes, filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        status, title, detail = ACCEPTANCE_RESULTS[number]
        line = f"criterion {number:2d} {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
