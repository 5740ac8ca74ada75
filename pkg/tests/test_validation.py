import numpy as np
import pytest

from conftest import make_record, make_spectrum
from gcims.errors import MalformedMetadata, MissingMetadataFile, NoValidSamples
from gcims.imsx import write_imsx
from gcims.metadata import format_metadata, parse_metadata, read_metadata, write_metadata
from gcims.validation import (load_dataset, validate_directory, validate_measurement,
                              validate_record)


def test_nan_fails_finite():
    a = np.ones((4, 4))
    a[1, 2] = np.nan
    r = validate_measurement(make_spectrum(a))
    assert not r.check("finite_values").passed
    assert not r.overall


def test_clean_synthetic_passes(small_dataset):
    for s in small_dataset.spectra_list():
        assert validate_measurement(s).overall


def test_negative_fraction_threshold():
    a = np.ones((10, 10))
    a.flat[:5] = -1.0  # 5%
    assert validate_measurement(make_spectrum(a)).failed == ["nonnegative_fraction"]
    b = np.ones((10, 10))
    b.flat[:1] = -1.0  # exactly 1% is tolerated
    assert validate_measurement(make_spectrum(b)).overall


@pytest.mark.parametrize("age,ok", [(100, False), (99, True), (0, True), (-1, False), (150, False)])
def test_age_range(age, ok):
    assert validate_record(make_record(age=age)).check("age_range").passed is ok


def test_good_record():
    assert validate_record(make_record(age=34, sex="female")).overall


@pytest.mark.parametrize("sex", ["unknown", "Female", "", "m"])
def test_sex_category(sex):
    r = validate_record(make_record(sex=sex))
    assert r.failed == ["sex_category"]


def test_bad_date():
    assert validate_record(make_record(collected_on="2024-13-40")).failed == ["date_parseable"]


def test_summary_line():
    r = validate_record(make_record("Q1", age=100))
    assert r.summary_line().startswith("Q1 FAIL age_range")
    assert validate_record(make_record("Q2")).summary_line() == "Q2 PASS"


# --- metadata table ---

def test_metadata_roundtrip():
    recs = [make_record("A"), make_record("B", label=None, sex="male", age=50)]
    assert parse_metadata(format_metadata(recs)) == recs


def test_metadata_errors_name_lines():
    head = "sample_id,age,sex,site,collected_on,label\n"
    with pytest.raises(MalformedMetadata, match="line 2"):
        parse_metadata(head + "A,abc,male,s,2024-01-01,Infected\n")
    with pytest.raises(MalformedMetadata, match="line 3"):
        parse_metadata(head + "A,3,male,s,2024-01-01,Infected\nB,3,male\n")
    with pytest.raises(MalformedMetadata, match="line 1"):
        parse_metadata("id,age\n")
    with pytest.raises(MalformedMetadata, match="duplicate"):
        parse_metadata(head + "A,3,male,s,2024-01-01,\nA,3,male,s,2024-01-01,\n")


def test_missing_metadata_file(tmp_path):
    with pytest.raises(MissingMetadataFile):
        read_metadata(tmp_path / "metadata.csv")


# --- directory loading ---

def _write_set(tmp_path, ages):
    recs = []
    for i, age in enumerate(ages):
        sid = f"P{i}"
        recs.append(make_record(sid, age=age))
        write_imsx(make_spectrum(np.ones((3, 4)) + i, sid), tmp_path / f"{sid}.imsx")
    write_metadata(recs, tmp_path / "metadata.csv")
    return tmp_path / "metadata.csv"


def test_load_excludes_failing_record(tmp_path):
    meta = _write_set(tmp_path, [30, 150, 45])
    ds, reports = load_dataset(tmp_path, meta)
    assert ds.sample_ids == ["P0", "P2"]
    assert [r.overall for r in reports] == [True, False, True]
    assert reports[1].failed == ["age_range"]


def test_load_never_admits_failures(tmp_path):
    meta = _write_set(tmp_path, [30, 40, 50, 60])
    bad = np.ones((3, 4))
    bad[0, 0] = np.inf
    write_imsx(make_spectrum(bad, "P1"), tmp_path / "P1.imsx")
    (tmp_path / "P3.imsx").unlink()
    ds, reports = load_dataset(tmp_path, meta)
    failing = {r.sample_id for r in reports if not r.overall}
    assert failing == {"P1", "P3"}
    assert not failing & set(ds.sample_ids)
    assert reports[3].failed == ["spectrum_readable"]


def test_header_id_mismatch(tmp_path):
    meta = _write_set(tmp_path, [30, 40])
    write_imsx(make_spectrum(np.ones((3, 4)), "other"), tmp_path / "P1.imsx")
    _, _, reports = validate_directory(tmp_path, meta)
    assert reports[1].failed == ["header_id_match"]


def test_axes_inconsistent(tmp_path):
    meta = _write_set(tmp_path, [30, 40])
    write_imsx(make_spectrum(np.ones((3, 5)), "P1"), tmp_path / "P1.imsx")
    _, _, reports = validate_directory(tmp_path, meta)
    assert reports[1].failed == ["axes_consistent"]


def test_empty_directory_no_valid_samples(tmp_path):
    write_metadata([], tmp_path / "metadata.csv")
    with pytest.raises(NoValidSamples):
        load_dataset(tmp_path, tmp_path / "metadata.csv")


def test_rows_without_spectra_no_valid_samples(tmp_path):
    write_metadata([make_record("A"), make_record("B")], tmp_path / "metadata.csv")
    with pytest.raises(NoValidSamples):
        load_dataset(tmp_path, tmp_path / "metadata.csv")


def test_full_synthetic_directory(small_dir, small_dataset):
    ds, reports = load_dataset(small_dir, small_dir / "metadata.csv")
    assert all(r.overall for r in reports)
    assert ds.sample_ids == small_dataset.sample_ids
    assert np.array_equal(ds.labels(), small_dataset.labels())
