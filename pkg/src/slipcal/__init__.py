"""Slip detection from multi-channel tactile signals.

The modules follow the workflow: collapse a tactile stream to one channel,
balance it into windowed datasets, study class spectra, then train the LSTM
and measure it against a band-energy threshold and across factor sweeps.
"""

from .balance import WindowedDataset, build_balanced, rebalance, rewindow, split_train_test
from .baseline import ThresholdModel, calibrate_threshold, classify_threshold, fit_threshold_model
from .errors import ParseError, SlipcalError
from .evaluation import (
    EvalReport,
    SweepAxis,
    SweepReport,
    downsample_windows,
    evaluate,
    exclusion_sweep,
    sweep_sampling_rates,
    sweep_window_sizes,
    transfer_matrix,
)
from .lstm import LstmModel, TrainConfig, predict_proba, predict_window, train
from .recording import Finger, Label, Material, Provenance, Recording, Scenario
from .signal import NormalizationStats, UniSignal, collapse_signal, fit_normalization, normalize
from .spectral import FrequencyBand, SpectralReport, most_significant_band, significance_analysis
from .synth import SynthConfig, generate_corpus, generate_recording

__version__ = "0.1.0"

__all__ = [
    "WindowedDataset",
    "build_balanced",
    "rebalance",
    "rewindow",
    "split_train_test",
    "ThresholdModel",
    "calibrate_threshold",
    "classify_threshold",
    "fit_threshold_model",
    "ParseError",
    "SlipcalError",
    "EvalReport",
    "SweepAxis",
    "SweepReport",
    "downsample_windows",
    "evaluate",
    "exclusion_sweep",
    "sweep_sampling_rates",
    "sweep_window_sizes",
    "transfer_matrix",
    "LstmModel",
    "TrainConfig",
    "predict_proba",
    "predict_window",
    "train",
    "Finger",
    "Label",
    "Material",
    "Provenance",
    "Recording",
    "Scenario",
    "NormalizationStats",
    "UniSignal",
    "collapse_signal",
    "fit_normalization",
    "normalize",
    "FrequencyBand",
    "SpectralReport",
    "most_significant_band",
    "significance_analysis",
    "SynthConfig",
    "generate_corpus",
    "generate_recording",
]
