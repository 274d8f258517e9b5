import numpy as np
import pytest

from tadualcv.data_model import validate
from tadualcv.synthetic import SynthConfig, default_mixing, generate


def test_generated_dataset_validates():
    ds, _ = generate(
        SynthConfig(n_visits=12, n_features=5, events_per_visit=(3, 9),
                    noise_scale=0.1, native_missing_rate=0.4, seed=0)
    )
    assert validate(ds) == []


def test_same_seed_identical():
    config = SynthConfig(n_visits=5, n_features=3, events_per_visit=(4, 8),
                         noise_scale=0.05, native_missing_rate=0.2, seed=9)
    a, truth_a = generate(config)
    b, truth_b = generate(config)
    for va, vb in zip(a.visits, b.visits):
        np.testing.assert_array_equal(va.times, vb.times)
        np.testing.assert_array_equal(va.values, vb.values)
    for ta, tb in zip(truth_a, truth_b):
        np.testing.assert_array_equal(ta, tb)


def test_missing_rate_calibration():
    config = SynthConfig(n_visits=100, n_features=10, events_per_visit=(10, 14),
                         native_missing_rate=0.3, seed=3)
    ds, truths = generate(config)
    total = sum(t.size for t in truths)
    assert total >= 10_000
    observed = ds.n_observed_cells()
    fraction = 1.0 - observed / total
    assert 0.29 <= fraction <= 0.31


def test_identity_mixing_pure_sinusoids():
    config = SynthConfig(n_visits=3, n_features=2, events_per_visit=(5, 5),
                         mixing=np.eye(2), noise_scale=0.0,
                         native_missing_rate=0.3, seed=4)
    ds, truths = generate(config)
    for visit, truth in zip(ds.visits, truths):
        observed = visit.observed()
        np.testing.assert_array_equal(visit.values[observed], truth[observed])
        assert np.all(np.abs(truth) <= 1.0 + 1e-12)


def test_truth_covers_masked_cells():
    config = SynthConfig(n_visits=4, n_features=3, events_per_visit=(4, 6),
                         native_missing_rate=0.5, seed=5)
    ds, truths = generate(config)
    for visit, truth in zip(ds.visits, truths):
        assert truth.shape == visit.values.shape
        assert not np.isnan(truth).any()


def test_default_mixing_row_normalized():
    mixing = default_mixing(6)
    np.testing.assert_allclose(mixing.sum(axis=1), np.ones(6))
    assert (mixing > 0).sum() > 6  # genuinely non-diagonal


def test_config_rejects_bad_values():
    with pytest.raises(ValueError):
        SynthConfig(events_per_visit=(1, 5))
    with pytest.raises(ValueError):
        SynthConfig(noise_scale=-0.1)
    with pytest.raises(ValueError):
        SynthConfig(native_missing_rate=1.0)
