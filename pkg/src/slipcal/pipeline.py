"""Stage glue shared by the command line and the demo scripts.

Every stage takes the root seed and derives its own stream from the stage
name, so rerunning one stage alone reproduces the same artifact.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .balance import build_balanced, split_train_test
from .recording import Label, Material, Recording
from .seeds import derive_seed
from .spectral import SpectralReport, significance_analysis
from .synth import SynthConfig, default_materials, generate_corpus

__all__ = ["synth_corpus", "balanced_split", "class_pools", "spectral_report", "recording_filename"]


def synth_corpus(settings, seed: int) -> list[Recording]:
    """Synthetic corpus from a ``SynthSettings``-like object."""
    materials = [replace(m, burst_center_hz=settings.burst_center_hz) for m in default_materials()]
    cfg = SynthConfig(fs_hz=settings.fs_hz, channels=settings.channels)
    return generate_corpus(
        materials,
        cfg,
        per_cell_duration_s=settings.per_cell_duration_s,
        seed=derive_seed(seed, "synth"),
        sensor_ids=tuple(settings.sensor_ids),
        sensor_gains=dict(settings.sensor_gains),
    )


def balanced_split(recordings: Sequence[Recording], window_size: int, seed: int):
    ds = build_balanced(recordings, window_size, derive_seed(seed, "balance", window_size))
    return split_train_test(ds, derive_seed(seed, "split", window_size))


def class_pools(recordings: Sequence[Recording]):
    """Collapsed signals grouped into (non-slip, slip) pools."""
    ns, sl = [], []
    for r in recordings:
        (sl if r.label is Label.SLIP else ns).append(r.collapse().samples)
    return ns, sl


def spectral_report(recordings: Sequence[Recording], seed: int, n_bootstrap: int = 100, n_repetitions: int = 200) -> SpectralReport:
    ns, sl = class_pools(recordings)
    fs = recordings[0].sampling_rate_hz
    return significance_analysis(ns, sl, fs, derive_seed(seed, "spectrum"), n_bootstrap, n_repetitions)


def recording_filename(r: Recording, index: int) -> str:
    speed = f"{r.speed_mm_s:g}"
    mat = "none" if r.material is Material.NONE else r.material.value.lower()
    return f"{index:03d}_{r.sensor_id}_{r.scenario.value.lower()}_{mat}_{speed}.csv"


def list_csv(directory) -> list[Path]:
    return sorted(Path(directory).glob("*.csv"))
