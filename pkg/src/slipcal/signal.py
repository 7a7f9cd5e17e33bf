"""Univariate gradient signal: collapse multi-channel frames and normalize."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateSignal, DimensionMismatch, EmptyInput, NonFiniteSample

__all__ = [
    "UniSignal",
    "NormalizationStats",
    "collapse_signal",
    "fit_normalization",
    "normalize",
    "denormalize",
    "percentile_linear",
]


@dataclass(frozen=True)
class UniSignal:
    """Collapsed gradient stream ``s_t`` sampled at ``sampling_rate_hz``."""

    samples: np.ndarray
    sampling_rate_hz: float = 1000.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise DimensionMismatch("UniSignal samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise NonFiniteSample("UniSignal contains NaN or Inf")
        if not self.sampling_rate_hz > 0:
            raise ValueError("sampling rate must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.samples, dtype=dtype)


@dataclass(frozen=True)
class NormalizationStats:
    """Robust input scaling bounds taken from the training signal."""

    p_low: float
    p_high: float

    def __post_init__(self):
        if not (np.isfinite(self.p_low) and np.isfinite(self.p_high)):
            raise DegenerateSignal("normalization bounds must be finite")
        if not self.p_low < self.p_high:
            raise DegenerateSignal(
                f"degenerate normalization bounds: p_low={self.p_low!r} >= p_high={self.p_high!r}"
            )
        with np.errstate(over="ignore", divide="ignore"):
            scale = 2.0 / (np.float64(self.p_high) - np.float64(self.p_low))
        if not np.isfinite(scale):
            raise DegenerateSignal("normalization span is too small to invert")


def _as_frames(frames) -> np.ndarray:
    if isinstance(frames, np.ndarray):
        arr = np.asarray(frames, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
    else:
        rows = [np.atleast_1d(np.asarray(f, dtype=float)) for f in frames]
        if len(rows) < 2:
            raise EmptyInput("need at least two frames to take a lag-one difference")
        m = rows[0].shape[0]
        for k, r in enumerate(rows):
            if r.ndim != 1 or r.shape[0] != m:
                raise DimensionMismatch(f"frame {k} has shape {r.shape}, expected ({m},)")
        arr = np.vstack(rows)
    if arr.ndim != 2:
        raise DimensionMismatch("frames must form a (T, m) array")
    return arr


def collapse_signal(frames: Sequence | np.ndarray, sampling_rate_hz: float = 1000.0) -> UniSignal:
    """Lag-one difference of the per-frame Euclidean norm.

    ``frames`` is a (T, m) array or a sequence of length-m vectors. The result
    has T - 1 samples: ``out[t-1] = |a_t| - |a_{t-1}|``.
    """
    arr = _as_frames(frames)
    if arr.shape[0] < 2:
        raise EmptyInput("need at least two frames to take a lag-one difference")
    if arr.shape[1] < 1:
        raise DimensionMismatch("frames must have at least one channel")
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr))[0, 0])
        raise NonFiniteSample(f"non-finite value in frame {bad}")
    norms = np.sqrt(np.einsum("ij,ij->i", arr, arr))
    return UniSignal(np.diff(norms), sampling_rate_hz)


def percentile_linear(values: np.ndarray, q: float) -> float:
    """Percentile by linear interpolation between order statistics.

    Rank ``r = q/100 * (n - 1)`` on the sorted data.
    """
    x = np.sort(np.asarray(values, dtype=float).ravel())
    if x.size == 0:
        raise EmptyInput("percentile of empty data")
    r = q / 100.0 * (x.size - 1)
    lo = int(np.floor(r))
    hi = min(lo + 1, x.size - 1)
    return float(x[lo] + (r - lo) * (x[hi] - x[lo]))


def fit_normalization(training_signal) -> NormalizationStats:
    """2.5th / 97.5th percentiles of the training signal."""
    x = np.asarray(training_signal, dtype=float).ravel()
    if x.size < 40:
        raise EmptyInput(f"need at least 40 samples to fit normalization, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteSample("training signal contains NaN or Inf")
    lo = percentile_linear(x, 2.5)
    hi = percentile_linear(x, 97.5)
    if not lo < hi:
        raise DegenerateSignal(f"2.5th and 97.5th percentiles coincide at {lo!r}")
    return NormalizationStats(lo, hi)


def normalize(signal, stats: NormalizationStats):
    """Map ``p_low -> -1`` and ``p_high -> +1``; values outside are not clamped.

    Returns a UniSignal for UniSignal input, otherwise an ndarray of the
    input's shape.
    """
    scale = 2.0 / (stats.p_high - stats.p_low)
    if isinstance(signal, UniSignal):
        return UniSignal((signal.samples - stats.p_low) * scale - 1.0, signal.sampling_rate_hz)
    x = np.asarray(signal, dtype=float)
    return (x - stats.p_low) * scale - 1.0


def denormalize(signal, stats: NormalizationStats):
    half_span = 0.5 * (stats.p_high - stats.p_low)
    if isinstance(signal, UniSignal):
        return UniSignal((signal.samples + 1.0) * half_span + stats.p_low, signal.sampling_rate_hz)
    return (np.asarray(signal, dtype=float) + 1.0) * half_span + stats.p_low
