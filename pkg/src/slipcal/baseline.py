"""Amplitude-threshold slip classifier.

Sum the single-sided amplitudes of a window over the most significant
frequency band, then call slip when the sum exceeds a threshold placed
where the class-wise empirical CDFs of those sums are furthest apart.

Reference thresholds reported for physical sensors at 50-sample windows
(not reproducible here): 0.0015 N (Nano17), 3.5 units (OptoForce20),
25 units (Biotac SP).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyBand, TooFewSamples, WindowSizeMismatch
from .recording import Label
from .spectral import FrequencyBand, single_sided_amplitude

__all__ = [
    "ThresholdModel",
    "band_mask",
    "band_energy",
    "band_energies",
    "ecdf_gap",
    "calibrate_threshold",
    "classify_threshold",
    "fit_threshold_model",
]


@dataclass(frozen=True)
class ThresholdModel:
    band: FrequencyBand
    threshold: float
    window_size: int
    sampling_rate_hz: float

    def __post_init__(self):
        if not np.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    def predict(self, samples) -> np.ndarray:
        x = np.atleast_2d(np.asarray(samples, dtype=float))
        if x.shape[1] != self.window_size:
            raise WindowSizeMismatch(f"windows have {x.shape[1]} samples, model expects {self.window_size}")
        e = band_energies(x, self.band, self.sampling_rate_hz)
        return (e > self.threshold).astype(np.int64)


def band_mask(length: int, band: FrequencyBand, fs: float) -> np.ndarray:
    """Bins (centre frequency k*fs/L) that fall inside the band."""
    freqs = np.arange(length // 2 + 1) * (fs / length)
    mask = band.contains(freqs)
    if not mask.any():
        raise EmptyBand(f"no bin of a {length}-sample window at {fs:g} Hz lies in [{band.low_hz}, {band.high_hz}] Hz")
    return mask


def band_energies(samples, band: FrequencyBand, fs: float) -> np.ndarray:
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    mask = band_mask(x.shape[1], band, fs)
    return single_sided_amplitude(x)[:, mask].sum(axis=1)


def band_energy(window, band: FrequencyBand, fs: float) -> float:
    """Sum of single-sided amplitudes over the band's bins for one window."""
    x = np.asarray(getattr(window, "samples", window), dtype=float).ravel()
    if x.size < 2:
        raise ValueError("window needs at least two samples")
    return float(band_energies(x[None], band, fs)[0])


def ecdf_gap(nonslip, slip, x) -> np.ndarray:
    """|ECDF_nonslip(x) - ECDF_slip(x)|, in the same integer form the KS statistic uses."""
    a = np.sort(np.asarray(nonslip, dtype=float).ravel())
    b = np.sort(np.asarray(slip, dtype=float).ravel())
    ca = np.searchsorted(a, x, side="right")
    cb = np.searchsorted(b, x, side="right")
    return np.abs(ca * b.size - cb * a.size) / float(a.size * b.size)


def calibrate_threshold(nonslip_sums, slip_sums) -> float:
    """Merged-sample point with the largest ECDF gap (smallest such point on ties)."""
    a = np.asarray(nonslip_sums, dtype=float).ravel()
    b = np.asarray(slip_sums, dtype=float).ravel()
    if a.size < 10 or b.size < 10:
        raise TooFewSamples(f"need at least 10 sums per class, got {a.size} and {b.size}")
    merged = np.unique(np.concatenate([a, b]))
    gap = ecdf_gap(a, b, merged)
    return float(merged[int(np.argmax(gap))])


def classify_threshold(model: ThresholdModel, window) -> Label:
    x = np.asarray(getattr(window, "samples", window), dtype=float).ravel()
    if x.size != model.window_size:
        raise WindowSizeMismatch(f"window has {x.size} samples, model expects {model.window_size}")
    return Label.SLIP if band_energy(x, model.band, model.sampling_rate_hz) > model.threshold else Label.NONSLIP


def fit_threshold_model(train_set, band: FrequencyBand) -> ThresholdModel:
    """Calibrate the threshold on a labelled windowed dataset."""
    fs = train_set.sampling_rate_hz
    e = band_energies(train_set.samples, band, fs)
    labels = np.asarray(train_set.labels)
    t = calibrate_threshold(e[labels == Label.NONSLIP], e[labels == Label.SLIP])
    return ThresholdModel(band, t, int(train_set.window_size), float(fs))
