"""Single-sided amplitude spectra and bootstrap KS significance between classes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInput, NoSignificantBand, NonFiniteSample, PoolTooShort, TooFewSamples

__all__ = [
    "AmplitudeSpectrum",
    "FrequencyBand",
    "SpectralReport",
    "single_sided_amplitude",
    "amplitude_spectrum",
    "ks_critical_value",
    "ks_statistic_rows",
    "ks_two_sample",
    "significance_analysis",
    "most_significant_band",
]


@dataclass(frozen=True)
class AmplitudeSpectrum:
    amplitudes: np.ndarray
    resolution_hz: float
    source_length: int

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.amplitudes.shape[-1]) * self.resolution_hz


@dataclass(frozen=True)
class FrequencyBand:
    low_hz: float
    high_hz: float

    def __post_init__(self):
        if not self.low_hz < self.high_hz:
            raise ValueError(f"band needs low < high, got ({self.low_hz}, {self.high_hz})")
        if self.low_hz < 0:
            raise ValueError("band cannot start below 0 Hz")

    def contains(self, freqs):
        freqs = np.asarray(freqs)
        return (freqs >= self.low_hz) & (freqs <= self.high_hz)


@dataclass(frozen=True)
class SpectralReport:
    """Per-bin class statistics over all bootstrap spectra plus KS significance.

    ``mean``, ``lo95`` and ``hi95`` have shape (2, n_bins); row 0 is non-slip,
    row 1 is slip.
    """

    frequencies: np.ndarray
    mean: np.ndarray
    lo95: np.ndarray
    hi95: np.ndarray
    significance: np.ndarray
    n_bootstrap: int
    n_repetitions: int
    sampling_rate_hz: float
    sequence_length: int
    seed: int


def single_sided_amplitude(x: np.ndarray) -> np.ndarray:
    """Single-sided amplitude of the DFT along the last axis (rectangular window).

    DC and (for even length) Nyquist are scaled by 1/L, interior bins by 2/L,
    so a sinusoid that completes an integer number of periods shows its
    amplitude directly.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n < 2:
        raise EmptyInput("need at least two samples for a spectrum")
    amp = np.abs(np.fft.rfft(x, axis=-1)) / n
    if n % 2 == 0:
        amp[..., 1:-1] *= 2.0
    else:
        amp[..., 1:] *= 2.0
    return amp


def amplitude_spectrum(sequence, fs: float) -> AmplitudeSpectrum:
    """Amplitude spectrum with bin spacing ``fs / L``.

    A sequence of ``round(fs)`` samples gives 1 Hz bins from 0 to fs/2.
    """
    x = np.asarray(sequence, dtype=float).ravel()
    if x.size < 2:
        raise EmptyInput("need at least two samples for a spectrum")
    if not np.all(np.isfinite(x)):
        raise NonFiniteSample("sequence contains NaN or Inf")
    return AmplitudeSpectrum(single_sided_amplitude(x), fs / x.size, x.size)


def ks_critical_value(alpha: float = 0.05) -> float:
    """Asymptotic two-sample coefficient c(alpha); c(0.05) = 1.358."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0))


def ks_statistic_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Two-sample KS statistic for each row pair of ``a`` (R, n) and ``b`` (R, m).

    The ECDF gap is accumulated in integer units of 1/(n*m) and evaluated only
    at the last element of each run of tied values.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n, m = a.shape[1], b.shape[1]
    vals = np.concatenate([a, b], axis=1)
    step = np.concatenate(
        [np.full(n, m, dtype=np.int64), np.full(m, -n, dtype=np.int64)]
    )
    order = np.argsort(vals, axis=1, kind="stable")
    sv = np.take_along_axis(vals, order, axis=1)
    gap = np.cumsum(step[order], axis=1)
    last_of_tie = np.ones_like(sv, dtype=bool)
    last_of_tie[:, :-1] = sv[:, :-1] != sv[:, 1:]
    d = np.where(last_of_tie, np.abs(gap), 0).max(axis=1)
    return d / float(n * m)


def ks_two_sample(a, b, alpha: float = 0.05) -> tuple[float, int]:
    """Two-sample KS test; returns (D, reject) with reject in {0, 1}."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size < 5 or b.size < 5:
        raise TooFewSamples(f"KS test needs at least 5 samples per set, got {a.size} and {b.size}")
    d = float(ks_statistic_rows(a[None], b[None])[0])
    n, m = a.size, b.size
    crit = ks_critical_value(alpha) * math.sqrt((n + m) / (n * m))
    return d, int(d > crit)


class _Pool:
    """Concatenated signals with a flat index over every valid sequence start."""

    def __init__(self, signals, length: int, name: str):
        arrays = [np.asarray(s, dtype=float).ravel() for s in signals]
        starts_per = [max(a.size - length + 1, 0) for a in arrays]
        if sum(starts_per) == 0:
            raise PoolTooShort(f"{name} pool has no signal of at least {length} samples")
        self.data = np.concatenate(arrays) if arrays else np.empty(0)
        offsets = np.concatenate([[0], np.cumsum([a.size for a in arrays])[:-1]])
        keep = np.flatnonzero(np.asarray(starts_per) > 0)
        self.offsets = offsets[keep]
        self.cum_starts = np.cumsum(np.asarray(starts_per)[keep])
        self.length = length

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        flat = rng.integers(self.cum_starts[-1], size=count)
        which = np.searchsorted(self.cum_starts, flat, side="right")
        start = flat - np.concatenate([[0], self.cum_starts[:-1]])[which]
        begin = self.offsets[which] + start
        return self.data[begin[:, None] + np.arange(self.length)]


def significance_analysis(
    nonslip_pool: Sequence,
    slip_pool: Sequence,
    fs: float,
    seed: int,
    n_bootstrap: int = 100,
    n_repetitions: int = 200,
    alpha: float = 0.05,
) -> SpectralReport:
    """Bootstrap per-bin KS significance between non-slip and slip spectra.

    Each repetition draws ``n_bootstrap`` random contiguous sequences of
    ``round(fs)`` samples per class (uniform over all valid starts, with
    replacement) and runs a KS test per frequency bin. Significance is the
    fraction of repetitions that reject. Class mean and 95 % bands are taken
    over all ``n_repetitions * n_bootstrap`` spectra of that class.
    """
    length = int(round(fs))
    pools = (_Pool(nonslip_pool, length, "non-slip"), _Pool(slip_pool, length, "slip"))
    n_bins = length // 2 + 1
    spectra = np.empty((2, n_repetitions, n_bootstrap, n_bins))
    for rep in range(n_repetitions):
        for cls, pool in enumerate(pools):
            rng = np.random.default_rng([seed, rep, cls])
            spectra[cls, rep] = single_sided_amplitude(pool.draw(rng, n_bootstrap))

    crit = ks_critical_value(alpha) * math.sqrt(2.0 / n_bootstrap)
    rejects = np.zeros(n_bins)
    for rep in range(n_repetitions):
        d = ks_statistic_rows(spectra[0, rep].T, spectra[1, rep].T)
        rejects += d > crit
    significance = rejects / n_repetitions

    flat = spectra.reshape(2, -1, n_bins)
    mean = flat.mean(axis=1)
    lo, hi = np.percentile(flat, [2.5, 97.5], axis=1)
    # Rounding can push the mean a hair outside a degenerate (constant) band.
    mean = np.clip(mean, lo, hi)
    return SpectralReport(
        frequencies=np.arange(n_bins) * (fs / length),
        mean=mean,
        lo95=lo,
        hi95=hi,
        significance=significance,
        n_bootstrap=n_bootstrap,
        n_repetitions=n_repetitions,
        sampling_rate_hz=float(fs),
        sequence_length=length,
        seed=seed,
    )


def most_significant_band(report: SpectralReport, threshold: float = 0.95) -> FrequencyBand:
    """Longest contiguous run of bins with significance >= threshold.

    Ties go to the lower frequency. A single-bin run is widened by half a bin
    on each side so the band has positive width.
    """
    sig = np.asarray(report.significance)
    freqs = np.asarray(report.frequencies)
    hit = sig >= threshold
    if not hit.any():
        raise NoSignificantBand(f"no bin reaches significance {threshold}")
    edges = np.diff(np.concatenate([[0], hit.astype(np.int8), [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1) - 1
    best = int(np.argmax(stops - starts))
    lo, hi = freqs[starts[best]], freqs[stops[best]]
    if lo == hi:
        half = 0.5 * (freqs[1] - freqs[0]) if freqs.size > 1 else 0.5
        lo, hi = max(lo - half, 0.0), hi + half
    return FrequencyBand(float(lo), float(hi))
