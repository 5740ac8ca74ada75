import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import make_record, make_spectrum
from gcims.core import (DRIFT, RETENTION, Axis, Dataset, SampleLabel, flatten, reshape,
                        spectrum_shape, stack_flat)
from gcims.errors import UnlabeledSamples


def test_axis_rejects_single_point():
    with pytest.raises(ValueError):
        Axis(DRIFT, 0.0, 1.0, 1)


def test_axis_rejects_nonpositive_step():
    with pytest.raises(ValueError):
        Axis(RETENTION, 0.0, 0.0, 4)


def test_axis_roundtrip_dict():
    a = Axis(DRIFT, 5.0, 0.025, 408)
    assert Axis.from_dict(a.to_dict()) == a
    assert a.values[-1] == pytest.approx(5.0 + 0.025 * 407)


def test_spectrum_shape_full_resolution():
    s = make_spectrum(np.zeros((3150, 4080), dtype=np.float32))
    assert spectrum_shape(s) == (3150, 4080)


def test_spectrum_shape_synthetic_default(small_dataset):
    from gcims.synthgen import SynthConfig, generate

    ds = generate(SynthConfig(n_samples=1))
    assert spectrum_shape(ds.spectra_list()[0]) == (315, 408)


def test_intensity_shape_must_match_axes():
    with pytest.raises(ValueError):
        from gcims.core import IMSSpectrum

        IMSSpectrum(Axis(DRIFT, 0, 1, 3), Axis(RETENTION, 0, 1, 2), np.zeros((3, 2)))


def test_intensity_read_only():
    s = make_spectrum(np.ones((2, 3)))
    with pytest.raises(ValueError):
        s.intensity[0, 0] = 5


def test_flatten_row_major():
    s = make_spectrum([[1, 2], [3, 4]])
    assert flatten(s).tolist() == [1, 2, 3, 4]


def test_flatten_zeros():
    assert flatten(make_spectrum(np.zeros((3, 3)))).tolist() == [0.0] * 9


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 9), st.integers(2, 9)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_flatten_reshape_identity(values):
    s = make_spectrum(values)
    back = reshape(flatten(s), s)
    assert np.array_equal(back.intensity, s.intensity)
    assert np.array_equal(flatten(back), flatten(s))


def test_reshape_wrong_length():
    s = make_spectrum(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        reshape(np.zeros(5), s)


def test_stack_flat():
    a, b = make_spectrum(np.zeros((2, 2))), make_spectrum(np.ones((2, 2)), "X002")
    assert stack_flat([a, b]).shape == (2, 4)


def test_label_codes():
    assert SampleLabel.INFECTED.code == 1
    assert SampleLabel.from_code(0) is SampleLabel.NOT_INFECTED


def test_dataset_rejects_missing_spectrum():
    rec = make_record("A")
    with pytest.raises(ValueError):
        Dataset((rec,), {})


def test_dataset_rejects_differing_axes():
    recs = (make_record("A"), make_record("B"))
    spectra = {"A": make_spectrum(np.zeros((2, 2)), "A"), "B": make_spectrum(np.zeros((2, 3)), "B")}
    with pytest.raises(ValueError):
        Dataset(recs, spectra)


def test_dataset_rejects_duplicate_ids():
    recs = (make_record("A"), make_record("A"))
    with pytest.raises(ValueError):
        Dataset(recs, {"A": make_spectrum(np.zeros((2, 2)), "A")})


def test_dataset_labels_require_all_labeled():
    recs = (make_record("A"), make_record("B", label=None))
    spectra = {k: make_spectrum(np.zeros((2, 2)), k) for k in "AB"}
    with pytest.raises(UnlabeledSamples):
        Dataset(recs, spectra).labels()
