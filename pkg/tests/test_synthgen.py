import numpy as np
import pytest

from gcims.errors import ConfigInvalid
from gcims.evaluation import evaluate_all
from gcims.preprocess import block_mean
from gcims.synthgen import (REFERENCE_CONFIG, SynthConfig, _layout, generate, reference_benchmark,
                            split_counts)
from gcims.validation import validate_measurement, validate_record


def nearest_centroid_loo(dataset, factors=(5, 4)):
    """Leave-one-out nearest-centroid accuracy on block-mean binned raw spectra."""
    X = np.array([block_mean(s.intensity, *factors).ravel() for s in dataset.spectra_list()])
    y = dataset.labels()
    hits = 0
    for i in range(len(y)):
        keep = np.arange(len(y)) != i
        c0 = X[keep & (y == 0)].mean(axis=0)
        c1 = X[keep & (y == 1)].mean(axis=0)
        guess = int(np.linalg.norm(X[i] - c1) < np.linalg.norm(X[i] - c0))
        hits += guess == y[i]
    return hits / len(y)


def test_same_config_bit_identical(small_config):
    a, b = generate(small_config), generate(small_config)
    assert a.records == b.records
    for sid in a.sample_ids:
        assert np.array_equal(a.spectra[sid].intensity, b.spectra[sid].intensity)


def test_different_seed_differs(small_config):
    from dataclasses import replace

    a = generate(small_config)
    b = generate(replace(small_config, seed=small_config.seed + 1))
    assert not np.array_equal(a.spectra_list()[0].intensity, b.spectra_list()[0].intensity)


def test_not_infected_unaffected_by_separation():
    base = dict(n_samples=20, rows=40, cols=48, seed=8)
    lo, hi = generate(SynthConfig(separation=0.0, **base)), generate(SynthConfig(separation=2.0, **base))
    assert np.array_equal(lo.labels(), hi.labels())
    neg = [sid for sid, c in zip(lo.sample_ids, lo.labels()) if c == 0]
    mean_lo = np.mean([lo.spectra[s].intensity for s in neg], axis=0)
    mean_hi = np.mean([hi.spectra[s].intensity for s in neg], axis=0)
    assert np.max(np.abs(mean_lo - mean_hi)) <= 1e-9
    pos = [sid for sid, c in zip(lo.sample_ids, lo.labels()) if c == 1]
    assert not np.array_equal(lo.spectra[pos[0]].intensity, hi.spectra[pos[0]].intensity)


def test_generated_data_passes_validation(small_dataset):
    for rec in small_dataset.records:
        assert validate_record(rec).overall
        assert validate_measurement(small_dataset.spectra[rec.sample_id]).overall
    ages = [r.age for r in small_dataset.records]
    assert min(ages) >= 18 and max(ages) <= 99
    assert [r.sex for r in small_dataset.records[:4]] == ["male", "female", "male", "female"]


@pytest.mark.parametrize("rows,cols", [(8, 8), (40, 48), (315, 408)])
def test_peak_centres_inside_grid(rows, cols):
    common, markers = _layout(SynthConfig(rows=rows, cols=cols, n_samples=1))
    for p in common + markers:
        assert 0 <= p.row <= rows - 1 and 0 <= p.col <= cols - 1


@pytest.mark.parametrize("n,frac,expected", [(76, 0.5, (38, 38)), (5, 0.5, (3, 2)), (7, 0.3, (2, 5)),
                                             (10, 0.0, (0, 10)), (3, 1.0, (3, 0))])
def test_split_counts(n, frac, expected):
    assert split_counts(n, frac) == expected


@pytest.mark.parametrize("kwargs", [dict(n_samples=0), dict(rows=4), dict(separation=-1.0),
                                    dict(noise_sigma=float("nan")), dict(infected_fraction=1.5),
                                    dict(seed=-1), dict(n_samples=2.5)])
def test_invalid_config(kwargs):
    with pytest.raises(ConfigInvalid):
        SynthConfig(**kwargs)


def test_reference_benchmark_shape():
    ds, bounds = reference_benchmark()
    assert len(ds) == 76
    assert int(ds.labels().sum()) == 38
    assert all(validate_record(r).overall for r in ds.records)
    assert ds.spectra_list()[0].shape == (315, 408)
    assert bounds["min_test_accuracy"] == {"random_forest": 0.75, "svm": 0.75, "plsda": 0.75}
    assert REFERENCE_CONFIG.seed == 42 and REFERENCE_CONFIG.separation == 1.0


@pytest.mark.slow
def test_separation_two_nearest_centroid():
    acc = nearest_centroid_loo(generate(SynthConfig(separation=2.0)))
    assert acc >= 0.9


@pytest.mark.slow
def test_no_separation_no_signal():
    ds = generate(SynthConfig(separation=0.0))
    rep = evaluate_all(ds, seed=42)
    for row in rep.rows:
        assert 0.3 <= row.test.roc_auc <= 0.7, (row.algorithm, row.test.roc_auc)
