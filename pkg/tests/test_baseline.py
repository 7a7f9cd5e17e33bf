import numpy as np
import pytest
import scipy.stats
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from slipcal.baseline import (
    ThresholdModel,
    band_energy,
    calibrate_threshold,
    classify_threshold,
    ecdf_gap,
    fit_threshold_model,
)
from slipcal.errors import EmptyBand, TooFewSamples, WindowSizeMismatch
from slipcal.recording import Label
from slipcal.spectral import FrequencyBand, ks_two_sample

from oracles import dft_amplitude

sums = arrays(float, st.integers(10, 80), elements=st.floats(0, 100).map(lambda v: round(v, 2)))


def test_band_energy_of_leaky_sine():
    t = np.arange(50) / 1000.0
    x = 2.0 * np.sin(2 * np.pi * 60 * t)
    e = band_energy(x, FrequencyBand(0, 100), 1000.0)
    amp = dft_amplitude(x)
    freqs = np.arange(26) * 20.0
    assert e == pytest.approx(amp[freqs <= 100].sum(), rel=1e-12)
    assert e >= 2.0 - 0.5


def test_band_energy_edges():
    assert band_energy(np.zeros(50), FrequencyBand(0, 100), 1000.0) == 0.0
    with pytest.raises(EmptyBand):
        band_energy(np.ones(50), FrequencyBand(600, 700), 1000.0)
    # bins sit 20 Hz apart at L = 50: a band between two centres is empty
    with pytest.raises(EmptyBand):
        band_energy(np.ones(50), FrequencyBand(61, 79), 1000.0)


def test_disjoint_clusters():
    rng = np.random.default_rng(0)
    ns, s = rng.uniform(0, 1, 40), rng.uniform(2, 3, 40)
    t = calibrate_threshold(ns, s)
    assert t == ns.max()
    assert np.all(ns <= t) and np.all(s > t)


def test_identical_distributions_no_information():
    rng = np.random.default_rng(1)
    ns, s = rng.normal(size=2000), rng.normal(size=2000)
    t = calibrate_threshold(ns, s)
    test_ns, test_s = rng.normal(size=5000), rng.normal(size=5000)
    acc = (np.count_nonzero(test_ns <= t) + np.count_nonzero(test_s > t)) / 10000
    assert abs(acc - 0.5) < 0.03


def test_overlapping_gaussians_against_grid_search():
    rng = np.random.default_rng(2)
    ns, s = rng.normal(0.0, 1.0, 20000), rng.normal(1.5, 1.0, 20000)
    grid = np.linspace(-3, 5, 80001)
    gap = np.abs(scipy.stats.norm.cdf(grid, 0, 1) - scipy.stats.norm.cdf(grid, 1.5, 1))
    assert calibrate_threshold(ns, s) == pytest.approx(grid[np.argmax(gap)], abs=0.1)


@given(sums, sums)
def test_threshold_properties(ns, s):
    t = calibrate_threshold(ns, s)
    merged = np.concatenate([ns, s])
    assert merged.min() <= t <= merged.max()
    # the gap at the threshold is the KS statistic
    assert ecdf_gap(ns, s, t) == ks_two_sample(ns, s)[0]
    # smallest maximizer: no smaller merged point reaches the same gap
    smaller = np.unique(merged[merged < t])
    assert np.all(ecdf_gap(ns, s, smaller) < ecdf_gap(ns, s, t))


@given(sums, sums, st.sampled_from([0.5, 2.0, 8.0]))
def test_scale_equivariance(ns, s, alpha):
    t = calibrate_threshold(ns, s)
    assert calibrate_threshold(alpha * ns, alpha * s) == alpha * t
    np.testing.assert_array_equal(alpha * ns > alpha * t, ns > t)


def test_too_few_samples():
    with pytest.raises(TooFewSamples):
        calibrate_threshold(np.arange(9.0), np.arange(20.0))


def test_strict_inequality_at_threshold():
    x = np.zeros(50)
    x[0] = 1.0
    band = FrequencyBand(0, 100)
    e = band_energy(x, band, 1000.0)
    assert classify_threshold(ThresholdModel(band, e, 50, 1000.0), x) is Label.NONSLIP
    assert classify_threshold(ThresholdModel(band, np.nextafter(e, -1), 50, 1000.0), x) is Label.SLIP


def test_window_length_checked():
    model = ThresholdModel(FrequencyBand(0, 100), 1.0, 50, 1000.0)
    with pytest.raises(WindowSizeMismatch):
        classify_threshold(model, np.zeros(40))
    with pytest.raises(WindowSizeMismatch):
        model.predict(np.zeros((3, 40)))


def test_fit_on_corpus(small_corpus):
    from slipcal.balance import build_balanced, split_train_test
    from slipcal.evaluation import evaluate

    tr, te = split_train_test(build_balanced(small_corpus, 50, seed=0), seed=1)
    model = fit_threshold_model(tr, FrequencyBand(40, 100))
    assert model.window_size == 50
    assert 0.5 < evaluate(model, te).accuracy < 1.0
