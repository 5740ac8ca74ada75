import struct

import numpy as np
import pytest

from gcims.container import from_bytes, load_model, save_model, to_bytes
from gcims.errors import BadMagic, DimensionMismatch, MalformedHeader, TruncatedPayload, UnsupportedVersion
from gcims.evaluation import train_final
from gcims.pipeline import FeatureConfig
from gcims.synthgen import SynthConfig, generate

KINDS = ["decision_tree", "logistic_regression", "random_forest", "svm", "plsda"]


@pytest.fixture(scope="module")
def trained(small_dataset):
    return {k: train_final(small_dataset, k, features=FeatureConfig(n_components=12), seed=2, cv=3)
            for k in KINDS}


@pytest.mark.parametrize("kind", KINDS)
def test_roundtrip_bit_exact(trained, small_dataset, kind):
    model = trained[kind]
    data = to_bytes(model)
    back = from_bytes(data)
    spectra = small_dataset.spectra_list()
    assert np.array_equal(model.decision_score(spectra), back.decision_score(spectra))
    assert np.array_equal(model.predict(spectra), back.predict(spectra))
    assert to_bytes(back) == data
    assert back.spec == model.spec
    assert back.features.preprocess == model.features.preprocess


def test_poly_svm_roundtrip(small_dataset):
    from gcims.models import SVMSpec

    grid = [SVMSpec(kernel="poly", degree=2, gamma=0.5, C=1.0)]
    model = train_final(small_dataset, "svm", features=FeatureConfig(n_components=8), cv=3, grid=grid)
    back = from_bytes(to_bytes(model))
    spectra = small_dataset.spectra_list()
    assert np.array_equal(model.decision_score(spectra), back.decision_score(spectra))


def test_save_and_load(tmp_path, trained):
    n = save_model(trained["plsda"], tmp_path / "m.vocm")
    assert (tmp_path / "m.vocm").stat().st_size == n
    assert to_bytes(load_model(tmp_path / "m.vocm")) == to_bytes(trained["plsda"])


def test_training_replays_identically(small_dataset, trained):
    again = train_final(small_dataset, "random_forest", features=FeatureConfig(n_components=12), seed=2, cv=3)
    assert to_bytes(again) == to_bytes(trained["random_forest"])


def test_run_config_embedded(trained):
    rc = from_bytes(to_bytes(trained["svm"])).run_config
    assert rc["seed"] == 2 and rc["cv"] == 3 and rc["algorithm"] == "svm"
    assert rc["preprocess"][0] == ["despike", [3]]


def test_bad_magic(trained):
    data = to_bytes(trained["decision_tree"])
    with pytest.raises(BadMagic):
        from_bytes(b"IMSX" + data[4:])


def test_bad_version(trained):
    data = bytearray(to_bytes(trained["decision_tree"]))
    data[4:6] = struct.pack("<H", 2)
    with pytest.raises(UnsupportedVersion):
        from_bytes(bytes(data))


@pytest.mark.parametrize("cut", [3, 9, 200, -1, -100])
def test_truncated(trained, cut):
    data = to_bytes(trained["logistic_regression"])
    with pytest.raises((TruncatedPayload, BadMagic)):
        from_bytes(data[:cut])


def test_trailing_garbage(trained):
    with pytest.raises(MalformedHeader):
        from_bytes(to_bytes(trained["plsda"]) + b"xx")


def test_mismatched_axes(trained):
    other = generate(SynthConfig(n_samples=2, rows=20, cols=20)).spectra_list()
    with pytest.raises(DimensionMismatch):
        trained["plsda"].predict(other)
