import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from slipcal.errors import EmptyInput, NoSignificantBand, PoolTooShort, TooFewSamples
from oracles import brute_ks, dft_amplitude, parseval_energy
from slipcal.spectral import (
    FrequencyBand,
    SpectralReport,
    amplitude_spectrum,
    ks_critical_value,
    ks_statistic_rows,
    ks_two_sample,
    most_significant_band,
    significance_analysis,
    single_sided_amplitude,
)


@given(arrays(float, st.integers(2, 300), elements=st.floats(-1e3, 1e3)))
def test_amplitude_matches_direct_dft(x):
    np.testing.assert_allclose(single_sided_amplitude(x), dft_amplitude(x), rtol=1e-9, atol=1e-9 * (1 + np.abs(x).sum()))


@pytest.mark.parametrize("n", [50, 850, 1000, 4096, 999])
def test_parseval(n):
    x = np.random.default_rng(n).normal(size=n)
    amp = single_sided_amplitude(x)
    assert parseval_energy(amp, n) == pytest.approx(np.sum(x**2), rel=1e-9)


def test_planted_sine_amplitude():
    t = np.arange(1000) / 1000.0
    spec = amplitude_spectrum(1.7 * np.sin(2 * np.pi * 60 * t + 0.4), 1000.0)
    assert spec.resolution_hz == 1.0
    assert spec.amplitudes[60] == pytest.approx(1.7, abs=1e-9)
    others = np.delete(spec.amplitudes, 60)
    assert others.max() < 1e-9


def test_dc_and_nyquist_scaling():
    x = 0.5 + 0.25 * (-1.0) ** np.arange(8)
    amp = single_sided_amplitude(x)
    assert amp[0] == pytest.approx(0.5)
    assert amp[-1] == pytest.approx(0.25)


def test_spectrum_of_short_input_rejected():
    with pytest.raises(EmptyInput):
        amplitude_spectrum([1.0], 1000.0)


def test_critical_value():
    assert ks_critical_value(0.05) == pytest.approx(1.358, abs=5e-4)
    assert ks_critical_value(0.01) > ks_critical_value(0.05)


def test_ks_matches_brute_force_exactly():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n, m = rng.integers(5, 201, size=2)
        # rounding creates plenty of ties within and across samples
        a = np.round(rng.normal(size=n), 1)
        b = np.round(rng.normal(0.2, 1.1, size=m), 1)
        assert ks_two_sample(a, b)[0] == brute_ks(a.tolist(), b.tolist())


@given(
    arrays(float, st.integers(5, 60), elements=st.floats(-5, 5).map(lambda v: round(v, 1))),
    arrays(float, st.integers(5, 60), elements=st.floats(-5, 5).map(lambda v: round(v, 1))),
)
def test_ks_agrees_with_scipy(a, b):
    d, _ = ks_two_sample(a, b)
    assert d == pytest.approx(scipy.stats.ks_2samp(a, b, method="asymp").statistic, abs=1e-12)
    assert ks_two_sample(b, a)[0] == d
    assert 0.0 <= d <= 1.0


def test_ks_decision_rule():
    rng = np.random.default_rng(1)
    a = rng.normal(size=100)
    assert ks_two_sample(a, a.copy()) == (0.0, 0)
    assert ks_two_sample(a, a + 100.0) == (1.0, 1)
    # the threshold itself: D must strictly exceed c * sqrt((n + m) / (n m))
    crit = ks_critical_value(0.05) * math.sqrt(2 / 100)
    d, rej = ks_two_sample(a, a + 0.3)
    assert rej == int(d > crit)


def test_ks_needs_five_samples():
    with pytest.raises(TooFewSamples):
        ks_two_sample([1, 2, 3, 4], [1, 2, 3, 4, 5])


def test_rows_match_single_calls():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(6, 40))
    b = rng.normal(size=(6, 30))
    rows = ks_statistic_rows(a, b)
    for k in range(6):
        assert rows[k] == ks_two_sample(a[k], b[k])[0]


def _tone_pools(rng, n_runs=4, length=3000, tone=60.0, amp=0.5, fs=1000.0):
    t = np.arange(length) / fs
    quiet = [rng.normal(0, 0.3, length) for _ in range(n_runs)]
    loud = [rng.normal(0, 0.3, length) + amp * np.sin(2 * np.pi * tone * t + rng.uniform(0, 6)) for _ in range(n_runs)]
    return quiet, loud


def test_significance_finds_planted_tone():
    # long pools keep bootstrap draws nearly independent; short ones inflate
    # off-band significance because every draw shares the same few samples
    quiet, loud = _tone_pools(np.random.default_rng(0), n_runs=10, length=20000)
    rep = significance_analysis(quiet, loud, 1000.0, seed=4, n_bootstrap=30, n_repetitions=20)
    assert rep.significance[60] == 1.0
    assert rep.frequencies[60] == 60.0
    off = np.r_[0:50, 70:501]
    assert rep.significance[off].mean() < 0.1
    assert rep.significance[off].max() < 0.5
    assert np.all(rep.lo95 <= rep.mean) and np.all(rep.mean <= rep.hi95)
    assert rep.mean[1, 60] > rep.mean[0, 60]
    band = most_significant_band(rep)
    assert band.contains(60.0)


def test_identical_pools_never_reject():
    # one sequence of exactly L samples: every draw is that same sequence
    x = np.random.default_rng(1).normal(size=1000)
    rep = significance_analysis([x], [x.copy()], 1000.0, seed=0, n_bootstrap=10, n_repetitions=5)
    assert np.all(rep.significance == 0.0)


def test_significance_is_seeded():
    quiet, loud = _tone_pools(np.random.default_rng(2), n_runs=2)
    a = significance_analysis(quiet, loud, 1000.0, seed=9, n_bootstrap=10, n_repetitions=4)
    b = significance_analysis(quiet, loud, 1000.0, seed=9, n_bootstrap=10, n_repetitions=4)
    np.testing.assert_array_equal(a.significance, b.significance)
    np.testing.assert_array_equal(a.mean, b.mean)


def test_pool_too_short():
    with pytest.raises(PoolTooShort):
        significance_analysis([np.zeros(999)], [np.zeros(2000)], 1000.0, seed=0, n_bootstrap=5, n_repetitions=1)


def _report(sig):
    sig = np.asarray(sig, dtype=float)
    z = np.zeros((2, sig.size))
    return SpectralReport(np.arange(sig.size, dtype=float), z, z, z, sig, 1, 1, 2.0 * (sig.size - 1), 2 * (sig.size - 1), 0)


def test_band_longest_run_and_ties():
    rep = _report([0, 1, 1, 0, 0.96, 0.97, 0.99, 0, 1, 1, 1])
    assert most_significant_band(rep) == FrequencyBand(4.0, 6.0)
    tie = _report([1, 1, 0, 1, 1, 0])
    assert most_significant_band(tie) == FrequencyBand(0.0, 1.0)


def test_single_bin_band_is_widened():
    assert most_significant_band(_report([0, 0, 1, 0])) == FrequencyBand(1.5, 2.5)
    assert most_significant_band(_report([1, 0, 0, 0])) == FrequencyBand(0.0, 0.5)


def test_no_significant_band():
    with pytest.raises(NoSignificantBand):
        most_significant_band(_report([0.9, 0.94, 0.5]))


def test_band_validation():
    with pytest.raises(ValueError):
        FrequencyBand(10.0, 10.0)
    with pytest.raises(ValueError):
        FrequencyBand(-1.0, 10.0)
