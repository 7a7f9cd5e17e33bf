"""Recordings and the experiment factor vocabulary (scenario, material, speed, finger)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, EmptyInput, InvariantViolation, NonFiniteSample
from .signal import UniSignal, collapse_signal

__all__ = [
    "Scenario",
    "Material",
    "Finger",
    "Label",
    "Provenance",
    "Recording",
    "SLIP_SPEEDS",
    "FREESPACE_SPEEDS",
    "SLIP_MATERIALS",
]


class Scenario(str, Enum):
    FREESPACE = "FreeSpace"
    PUSH = "Push"
    SLIP = "Slip"


class Material(str, Enum):
    ALUMINUM = "Aluminum"
    PVC = "PVC"
    NEOPRENE = "Neoprene"
    CARDBOARD = "Cardboard"
    PLYWOOD = "Plywood"
    NONE = "None"


class Finger(str, Enum):
    INDEX = "Index"
    MIDDLE = "Middle"
    LITTLE = "Little"


class Label(int, Enum):
    NONSLIP = 0
    SLIP = 1


SLIP_SPEEDS = (5.0, 25.0, 50.0, 75.0)
FREESPACE_SPEEDS = (25.0, 50.0, 75.0)
SLIP_MATERIALS = tuple(m for m in Material if m is not Material.NONE)


class Provenance(NamedTuple):
    scenario: Scenario
    material: Material
    speed_mm_s: float
    sensor_id: str
    finger: Finger

    @property
    def label(self) -> Label:
        return Label.SLIP if self.scenario is Scenario.SLIP else Label.NONSLIP

    @property
    def cell(self) -> tuple:
        """Balancing cell key: (label, scenario, material, speed)."""
        return (self.label, self.scenario, self.material, self.speed_mm_s)


def check_factors(scenario: Scenario, material: Material, speed_mm_s: float) -> None:
    """Raise InvariantViolation unless the factor combination is a valid experiment cell."""
    if scenario is Scenario.FREESPACE:
        if material is not Material.NONE:
            raise InvariantViolation("FreeSpace recordings cannot have a material")
        if speed_mm_s not in FREESPACE_SPEEDS:
            raise InvariantViolation(f"FreeSpace speed must be one of {FREESPACE_SPEEDS}, got {speed_mm_s}")
    elif scenario is Scenario.SLIP:
        if material is Material.NONE:
            raise InvariantViolation("Slip recordings need a material")
        if speed_mm_s not in SLIP_SPEEDS:
            raise InvariantViolation(f"Slip speed must be one of {SLIP_SPEEDS}, got {speed_mm_s}")
    elif scenario is Scenario.PUSH:
        if material is Material.NONE:
            raise InvariantViolation("Push recordings need a material")
        if speed_mm_s != 0.0:
            raise InvariantViolation(f"Push speed must be 0, got {speed_mm_s}")
    else:  # pragma: no cover
        raise InvariantViolation(f"unknown scenario {scenario!r}")


@dataclass(frozen=True, eq=False)
class Recording:
    """One contiguous multi-channel capture.

    ``frames`` is a (T, m) array of raw sensor vectors at ``sampling_rate_hz``.
    """

    frames: np.ndarray
    sampling_rate_hz: float
    scenario: Scenario
    material: Material
    speed_mm_s: float
    sensor_id: str = "sensor0"
    finger: Finger = Finger.INDEX

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=float)
        if frames.ndim == 1:
            frames = frames[:, None]
        if frames.ndim != 2 or frames.shape[1] < 1:
            raise DimensionMismatch("frames must be a (T, m) array with m >= 1")
        if frames.shape[0] < 2:
            raise EmptyInput("a recording needs at least two frames")
        if not np.all(np.isfinite(frames)):
            raise NonFiniteSample("recording contains NaN or Inf")
        if not self.sampling_rate_hz > 0:
            raise InvariantViolation("sampling rate must be positive")
        scenario = Scenario(self.scenario)
        material = Material(self.material)
        speed = float(self.speed_mm_s)
        check_factors(scenario, material, speed)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "scenario", scenario)
        object.__setattr__(self, "material", material)
        object.__setattr__(self, "speed_mm_s", speed)
        object.__setattr__(self, "finger", Finger(self.finger))
        object.__setattr__(self, "sensor_id", str(self.sensor_id))

    def __len__(self):
        return self.frames.shape[0]

    @property
    def channels(self) -> int:
        return self.frames.shape[1]

    @property
    def provenance(self) -> Provenance:
        return Provenance(self.scenario, self.material, self.speed_mm_s, self.sensor_id, self.finger)

    @property
    def label(self) -> Label:
        return self.provenance.label

    def collapse(self) -> UniSignal:
        return collapse_signal(self.frames, self.sampling_rate_hz)
