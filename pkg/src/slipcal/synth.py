"""Seeded stick-slip tactile recordings for desk-scale experiments.

Every scenario shares a per-channel sensor offset, white noise and the
arm's idle vibration. Push adds slow force ramps plus band-limited contact
crackle; Slip adds the same ramps plus Poisson-timed damped oscillations
near the catch-and-snap frequency, scaled by speed and material.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import signal as sps

from .errors import InvalidCombination, InvariantViolation
from .recording import (
    FREESPACE_SPEEDS,
    SLIP_SPEEDS,
    Finger,
    Material,
    Recording,
    Scenario,
    check_factors,
)
from .seeds import derive_seed

__all__ = [
    "MaterialProfile",
    "SynthConfig",
    "default_materials",
    "generate_recording",
    "generate_corpus",
]


@dataclass(frozen=True)
class MaterialProfile:
    name: str
    burst_rate_hz: float = 50.0
    burst_center_hz: float = 65.0
    burst_bandwidth_hz: float = 25.0
    burst_gain: float = 1.0
    noise_floor: float = 1.0
    texture_seed_offset: int = 0

    @property
    def material(self) -> Material:
        return Material(self.name)


@dataclass(frozen=True)
class SynthConfig:
    fs_hz: float = 1000.0
    duration_s: float = 10.0
    channels: int = 3
    idle_vibration_hz: float = 200.0
    idle_gain: float = 0.004
    speed_amplitude_exponent: float = 0.5
    seed: int = 0
    noise_std: float = 0.002
    burst_amplitude: float = 0.05
    crackle_amplitude: float = 0.01
    crackle_rate_hz: float = 40.0
    crackle_band_hz: tuple = (5.0, 450.0)
    ramp_amplitude: float = 0.5
    preload: float = 1.0
    sensor_offset: float = 1.0
    sensor_gain: float = 1.0

    def __post_init__(self):
        if self.channels < 1:
            raise InvalidCombination("need at least one channel")
        if not self.fs_hz > 0:
            raise InvalidCombination("sampling rate must be positive")


def default_materials() -> tuple[MaterialProfile, ...]:
    """Five profiles; neoprene is the soft, low-gain outlier."""
    return (
        MaterialProfile("Aluminum", burst_rate_hz=55.0, burst_bandwidth_hz=22.0, burst_gain=1.0, texture_seed_offset=0),
        MaterialProfile("PVC", burst_rate_hz=50.0, burst_bandwidth_hz=25.0, burst_gain=0.9, texture_seed_offset=1),
        MaterialProfile("Neoprene", burst_rate_hz=35.0, burst_bandwidth_hz=35.0, burst_gain=0.55, texture_seed_offset=2),
        MaterialProfile("Cardboard", burst_rate_hz=45.0, burst_bandwidth_hz=28.0, burst_gain=0.8, texture_seed_offset=3),
        MaterialProfile("Plywood", burst_rate_hz=50.0, burst_bandwidth_hz=25.0, burst_gain=0.95, texture_seed_offset=4),
    )


def _ramps(rng, n, fs, amplitude):
    t = np.arange(n) / fs
    out = np.zeros(n)
    for _ in range(3):
        freq = rng.uniform(0.1, 2.0)
        out += rng.uniform(0.2, 1.0) * amplitude / 3 * np.sin(2 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
    return out


def _bursts(rng, n, fs, rate, center, bandwidth, amplitude):
    """Poisson-timed exponentially decaying sinusoids (damping set by bandwidth)."""
    out = np.zeros(n)
    tau = 1.0 / (np.pi * bandwidth)
    length = int(np.ceil(5 * tau * fs))
    k = np.arange(length) / fs
    envelope = np.exp(-k / tau) * (1.0 - np.exp(-k / 0.0015))
    count = rng.poisson(rate * n / fs)
    starts = rng.integers(-length + 1, n, size=count)
    for s in starts:
        freq = center + rng.normal(0.0, bandwidth / 8)
        amp = amplitude * rng.lognormal(0.0, 0.4)
        burst = amp * envelope * np.sin(2 * np.pi * freq * k + rng.uniform(0, 2 * np.pi))
        lo, hi = max(s, 0), min(s + length, n)
        out[lo:hi] += burst[lo - s : hi - s]
    return out


def _crackle(rng, n, fs, rate, band, amplitude):
    """Band-limited noise bursts from static contact (no periodic structure)."""
    white = rng.normal(size=n)
    hi = min(band[1], 0.45 * fs)
    sos = sps.butter(4, [band[0], hi], btype="bandpass", fs=fs, output="sos")
    noise = sps.sosfilt(sos, white)
    noise /= np.std(noise) + 1e-300
    tau = 0.012
    length = int(np.ceil(5 * tau * fs))
    kernel = np.exp(-np.arange(length) / (tau * fs))
    impulses = np.zeros(n)
    count = rng.poisson(rate * n / fs)
    impulses[rng.integers(0, n, size=count)] += rng.lognormal(0.0, 0.4, size=count)
    envelope = np.convolve(impulses, kernel)[:n]
    return amplitude * envelope * noise


def generate_recording(
    scenario: Scenario,
    material: MaterialProfile | None,
    speed_mm_s: float,
    cfg: SynthConfig = SynthConfig(),
    sensor_id: str = "sensor0",
    finger: Finger = Finger.INDEX,
    seed: int | None = None,
) -> Recording:
    """One synthetic recording; deterministic in (scenario, material, speed, sensor, cfg, seed)."""
    scenario = Scenario(scenario)
    mat = Material.NONE if material is None else material.material
    try:
        check_factors(scenario, mat, float(speed_mm_s))
    except InvariantViolation as exc:
        raise InvalidCombination(str(exc)) from None
    n = int(round(cfg.duration_s * cfg.fs_hz))
    if n < 2:
        raise InvalidCombination("duration too short for two samples")
    if material is not None and not material.burst_center_hz < cfg.fs_hz / 2:
        raise InvalidCombination("burst centre must lie below Nyquist")
    if seed is None:
        tex = 0 if material is None else material.texture_seed_offset
        seed = derive_seed(cfg.seed, "synth", scenario, mat, float(speed_mm_s), sensor_id, tex)
    rng = np.random.default_rng(seed)
    fs = cfg.fs_hz
    m = cfg.channels

    # Sensor-specific geometry: fixed by sensor id, not by cell.
    srng = np.random.default_rng(derive_seed(cfg.seed, "sensor", sensor_id))
    gains = np.abs(srng.normal(1.0, 0.2, size=m))
    direction = gains / np.linalg.norm(gains)
    offset = np.abs(srng.normal(1.0, 0.3, size=m))
    offset *= cfg.sensor_offset / np.linalg.norm(offset)
    idle_dir = direction + 0.3 * srng.normal(size=m)
    idle_dir /= np.linalg.norm(idle_dir)

    t = np.arange(n) / fs
    jitter = 1.0 + 0.1 * np.sin(2 * np.pi * rng.uniform(0.05, 0.5) * t + rng.uniform(0, 2 * np.pi))
    idle = cfg.idle_gain * jitter * np.sin(2 * np.pi * cfg.idle_vibration_hz * t + rng.uniform(0, 2 * np.pi))

    force = np.zeros(n)
    if scenario is not Scenario.FREESPACE:
        force += cfg.preload + _ramps(rng, n, fs, cfg.ramp_amplitude)
    if scenario is Scenario.PUSH:
        force += _crackle(rng, n, fs, cfg.crackle_rate_hz, cfg.crackle_band_hz, cfg.crackle_amplitude)
    if scenario is Scenario.SLIP:
        amp = (
            cfg.burst_amplitude
            * material.burst_gain
            * (float(speed_mm_s) / 25.0) ** cfg.speed_amplitude_exponent
        )
        force += _bursts(rng, n, fs, material.burst_rate_hz, material.burst_center_hz, material.burst_bandwidth_hz, amp)

    noise_scale = cfg.noise_std * (1.0 if material is None else material.noise_floor)
    frames = (
        offset[None, :]
        + force[:, None] * direction[None, :]
        + idle[:, None] * idle_dir[None, :]
        + rng.normal(scale=noise_scale, size=(n, m))
    ) * cfg.sensor_gain
    return Recording(frames, fs, scenario, mat, float(speed_mm_s), sensor_id, finger)


def generate_corpus(
    materials: Sequence[MaterialProfile] | None = None,
    cfg: SynthConfig = SynthConfig(),
    per_cell_duration_s: float = 10.0,
    seed: int = 0,
    sensor_ids: Sequence[str] = ("index",),
    fingers: Sequence[Finger] | None = None,
    sensor_gains: Mapping[str, float] | None = None,
    largest_window: int = 200,
    scale_nonslip: bool = True,
) -> list[Recording]:
    """Full factor grid for each sensor id.

    Slip cells get ``per_cell_duration_s``. With ``scale_nonslip`` the push
    cells get twice that and free-space cells 10/3 of it, which is what the
    class/factor ledger consumes, so little data is trimmed away.
    """
    materials = tuple(default_materials() if materials is None else materials)
    if per_cell_duration_s * cfg.fs_hz < 2 * largest_window:
        raise InvalidCombination(
            f"per-cell duration {per_cell_duration_s}s holds fewer than two windows of {largest_window}"
        )
    if fingers is None:
        fingers = [list(Finger)[k % len(Finger)] for k in range(len(sensor_ids))]
    sensor_gains = dict(sensor_gains or {})
    n_mat, n_spd, n_free = len(materials), len(SLIP_SPEEDS), len(FREESPACE_SPEEDS)
    push_scale = n_spd / 2 if scale_nonslip else 1.0
    # one extra window per cell absorbs the sample lost to differencing
    free_scale = (n_mat * n_spd / 2) / n_free if scale_nonslip else 1.0
    out = []
    for sensor_id, finger in zip(sensor_ids, fingers):
        base = replace(cfg, seed=seed, sensor_gain=cfg.sensor_gain * sensor_gains.get(sensor_id, 1.0))
        for mat in materials:
            for speed in SLIP_SPEEDS:
                c = replace(base, duration_s=per_cell_duration_s + 1.0 / cfg.fs_hz)
                out.append(generate_recording(Scenario.SLIP, mat, speed, c, sensor_id, finger))
        for mat in materials:
            c = replace(base, duration_s=per_cell_duration_s * push_scale + 1.0 / cfg.fs_hz)
            out.append(generate_recording(Scenario.PUSH, mat, 0.0, c, sensor_id, finger))
        for speed in FREESPACE_SPEEDS:
            c = replace(base, duration_s=np.ceil(per_cell_duration_s * free_scale) + 1.0 / cfg.fs_hz)
            out.append(generate_recording(Scenario.FREESPACE, None, speed, c, sensor_id, finger))
    return out
