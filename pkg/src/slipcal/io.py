"""File formats and run configuration.

All tabular artifacts are CSV preceded by ``# key=value`` comment lines.
Floats are written with 17 significant digits so reading them back is
exact. Layouts are documented in docs/FORMATS.md.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .balance import WindowedDataset
from .baseline import ThresholdModel
from .errors import InvariantViolation, ParseError
from .evaluation import EvalReport
from .lstm import LstmModel, TrainConfig
from .recording import Finger, Label, Material, Provenance, Recording, Scenario
from .signal import UniSignal
from .spectral import FrequencyBand, SpectralReport

__all__ = [
    "read_recording",
    "write_recording",
    "read_signal",
    "write_signal",
    "read_dataset",
    "write_dataset",
    "write_spectral_report",
    "read_spectral_report",
    "plot_spectral_report",
    "write_eval_report",
    "save_model",
    "load_model",
    "save_threshold_model",
    "load_threshold_model",
    "RunConfig",
    "load_config",
    "parse_config",
]

RECORDING_MAGIC = "slipcal-recording"
SIGNAL_MAGIC = "slipcal-signal"
DATASET_MAGIC = "slipcal-dataset"
FORMAT_VERSION = 1


def _g(x: float) -> str:
    return format(float(x), ".17g")


def _write_text(path, text: str, overwrite: bool) -> None:
    path = Path(path)
    if path.exists() and not overwrite:
        raise FileExistsError(f"{path} exists (pass overwrite=True to replace it)")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _split_header(lines: list[str], magic: str, path) -> tuple[dict, int]:
    meta = {}
    k = 0
    while k < len(lines) and lines[k].startswith("#"):
        body = lines[k][1:].strip()
        if k == 0:
            parts = body.split()
            if len(parts) != 2 or parts[0] != magic:
                raise ParseError(f"{path}: expected '# {magic} v{FORMAT_VERSION}' header", line=1)
            if parts[1] != f"v{FORMAT_VERSION}":
                raise ParseError(f"{path}: unsupported format version {parts[1]!r}", line=1)
        elif "=" in body:
            key, value = body.split("=", 1)
            meta[key.strip()] = value.strip()
        k += 1
    if not lines or not lines[0].startswith("#"):
        raise ParseError(f"{path}: missing '# {magic}' header", line=1)
    return meta, k


def _require(meta: dict, key: str, path, convert=str):
    if key not in meta:
        raise ParseError(f"{path}: header field {key!r} missing")
    try:
        return convert(meta[key])
    except (ValueError, KeyError) as exc:
        raise ParseError(f"{path}: bad value for {key!r}: {meta[key]!r}") from exc


def _parse_rows(lines: list[str], first_line: int, ncols: int, path) -> np.ndarray:
    """Numeric rows; errors name the 1-based file line and column."""
    out = np.empty((len(lines), ncols))
    for r, line in enumerate(lines):
        cells = line.rstrip("\r\n").split(",")
        lineno = first_line + r
        if len(cells) != ncols:
            raise ParseError(f"{path}: expected {ncols} fields, found {len(cells)}", line=lineno)
        for c, cell in enumerate(cells):
            try:
                out[r, c] = float(cell)
            except ValueError:
                raise ParseError(f"{path}: non-numeric value {cell!r} in row {r}", line=lineno, column=c + 1) from None
            if not math.isfinite(out[r, c]):
                raise ParseError(f"{path}: non-finite value in row {r}", line=lineno, column=c + 1)
    return out


def _read_lines(path) -> list[str]:
    with open(path, newline="") as fh:
        return [ln for ln in fh.read().splitlines() if ln.strip() != ""]


def write_recording(recording: Recording, path, overwrite: bool = False) -> None:
    """Canonical recording CSV: metadata header, then ``index,ch0..ch{m-1}`` rows."""
    if len(recording) < 2:
        raise InvariantViolation("refusing to write a recording with fewer than two frames")
    m = recording.channels
    buf = _io.StringIO()
    buf.write(f"# {RECORDING_MAGIC} v{FORMAT_VERSION}\n")
    buf.write(f"# fs={_g(recording.sampling_rate_hz)}\n")
    buf.write(f"# m={m}\n")
    buf.write(f"# scenario={recording.scenario.value}\n")
    buf.write(f"# material={recording.material.value}\n")
    buf.write(f"# speed_mm_s={_g(recording.speed_mm_s)}\n")
    buf.write(f"# sensor_id={recording.sensor_id}\n")
    buf.write(f"# finger={recording.finger.value}\n")
    buf.write(",".join(["index"] + [f"ch{k}" for k in range(m)]) + "\n")
    for k, row in enumerate(recording.frames):
        buf.write(str(k) + "," + ",".join(_g(v) for v in row) + "\n")
    _write_text(path, buf.getvalue(), overwrite)


def read_recording(path) -> Recording:
    lines = _read_lines(path)
    meta, k = _split_header(lines, RECORDING_MAGIC, path)
    fs = _require(meta, "fs", path, float)
    m = _require(meta, "m", path, int)
    if k >= len(lines):
        raise ParseError(f"{path}: missing column header", line=k + 1)
    cols = lines[k].split(",")
    if cols != ["index"] + [f"ch{j}" for j in range(m)]:
        raise ParseError(f"{path}: column header does not match m={m}", line=k + 1)
    rows = _parse_rows(lines[k + 1 :], k + 2, m + 1, path)
    if rows.shape[0] < 2:
        raise InvariantViolation(f"{path}: a recording needs at least two rows")
    idx = rows[:, 0]
    if np.any(np.diff(idx) <= 0):
        bad = int(np.flatnonzero(np.diff(idx) <= 0)[0]) + 1
        raise ParseError(f"{path}: index is not increasing", line=k + 2 + bad)
    try:
        return Recording(
            rows[:, 1:],
            fs,
            Scenario(_require(meta, "scenario", path)),
            Material(_require(meta, "material", path)),
            _require(meta, "speed_mm_s", path, float),
            _require(meta, "sensor_id", path),
            Finger(_require(meta, "finger", path)),
        )
    except ValueError as exc:
        if isinstance(exc, InvariantViolation):
            raise InvariantViolation(f"{path}: {exc}") from None
        raise InvariantViolation(f"{path}: {exc}") from None


def write_signal(signal: UniSignal, path, provenance: Provenance | None = None, overwrite: bool = False) -> None:
    buf = _io.StringIO()
    buf.write(f"# {SIGNAL_MAGIC} v{FORMAT_VERSION}\n")
    buf.write(f"# fs={_g(signal.sampling_rate_hz)}\n")
    if provenance is not None:
        buf.write(f"# scenario={provenance.scenario.value}\n")
        buf.write(f"# material={provenance.material.value}\n")
        buf.write(f"# speed_mm_s={_g(provenance.speed_mm_s)}\n")
        buf.write(f"# sensor_id={provenance.sensor_id}\n")
        buf.write(f"# finger={provenance.finger.value}\n")
    buf.write("index,s\n")
    for k, v in enumerate(signal.samples):
        buf.write(f"{k},{_g(v)}\n")
    _write_text(path, buf.getvalue(), overwrite)


def read_signal(path) -> tuple[UniSignal, Provenance | None]:
    lines = _read_lines(path)
    meta, k = _split_header(lines, SIGNAL_MAGIC, path)
    if k >= len(lines) or lines[k] != "index,s":
        raise ParseError(f"{path}: expected 'index,s' column header", line=k + 1)
    rows = _parse_rows(lines[k + 1 :], k + 2, 2, path)
    sig = UniSignal(rows[:, 1], _require(meta, "fs", path, float))
    prov = None
    if "scenario" in meta:
        prov = Provenance(
            Scenario(meta["scenario"]), Material(meta["material"]), float(meta["speed_mm_s"]),
            meta["sensor_id"], Finger(meta["finger"]),
        )
    return sig, prov


_DATASET_META = ["label", "scenario", "material", "speed_mm_s", "sensor_id", "finger"]


def write_dataset(dataset: WindowedDataset, path, extra: dict | None = None, overwrite: bool = False) -> None:
    """One row per window: provenance columns then ``s0..s{W-1}``."""
    w = dataset.window_size
    buf = _io.StringIO()
    buf.write(f"# {DATASET_MAGIC} v{FORMAT_VERSION}\n")
    buf.write(f"# window_size={w}\n")
    buf.write(f"# fs={_g(dataset.sampling_rate_hz)}\n")
    buf.write(f"# seed={dataset.seed}\n")
    for key, value in (extra or {}).items():
        buf.write(f"# {key}={value}\n")
    buf.write(",".join(_DATASET_META + [f"s{k}" for k in range(w)]) + "\n")
    for row, lab, p in zip(dataset.samples, dataset.labels, dataset.provenance):
        head = [Label(int(lab)).name, p.scenario.value, p.material.value, _g(p.speed_mm_s), p.sensor_id, p.finger.value]
        buf.write(",".join(head) + "," + ",".join(_g(v) for v in row) + "\n")
    _write_text(path, buf.getvalue(), overwrite)


def read_dataset(path) -> WindowedDataset:
    lines = _read_lines(path)
    meta, k = _split_header(lines, DATASET_MAGIC, path)
    w = _require(meta, "window_size", path, int)
    fs = _require(meta, "fs", path, float)
    seed = meta.get("seed")
    seed = None if seed in (None, "None") else int(seed)
    expected = _DATASET_META + [f"s{j}" for j in range(w)]
    if k >= len(lines) or lines[k].split(",") != expected:
        raise ParseError(f"{path}: column header does not match window_size={w}", line=k + 1)
    labels, prov, rows = [], [], []
    for r, line in enumerate(lines[k + 1 :]):
        lineno = k + 2 + r
        cells = line.split(",")
        if len(cells) != len(expected):
            raise ParseError(f"{path}: expected {len(expected)} fields, found {len(cells)}", line=lineno)
        try:
            labels.append(Label[cells[0]])
            prov.append(Provenance(Scenario(cells[1]), Material(cells[2]), float(cells[3]), cells[4], Finger(cells[5])))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"{path}: bad metadata in row {r}: {exc}", line=lineno) from None
        rows.append(cells[6:])
    samples = _parse_rows([",".join(r) for r in rows], k + 2, w, path) if rows else np.empty((0, w))
    return WindowedDataset(samples, np.asarray(labels, dtype=np.int64), tuple(prov), w, fs, (), seed)


def write_spectral_report(report: SpectralReport, path, extra: dict | None = None, overwrite: bool = False) -> None:
    """Columns frequency_hz, class, mean, lo95, hi95, significance (two rows per bin)."""
    buf = _io.StringIO()
    buf.write(
        f"# seed={report.seed} n_bootstrap={report.n_bootstrap} n_repetitions={report.n_repetitions} "
        f"fs={_g(report.sampling_rate_hz)} sequence_length={report.sequence_length}\n"
    )
    for key, value in (extra or {}).items():
        buf.write(f"# {key}={value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frequency_hz", "class", "mean", "lo95", "hi95", "significance"])
    for j, f in enumerate(report.frequencies):
        for cls, name in ((0, "NonSlip"), (1, "Slip")):
            w.writerow([_g(f), name, _g(report.mean[cls, j]), _g(report.lo95[cls, j]), _g(report.hi95[cls, j]), _g(report.significance[j])])
    _write_text(path, buf.getvalue(), overwrite)


def read_spectral_report(path) -> SpectralReport:
    lines = _read_lines(path)
    meta = {}
    k = 0
    while k < len(lines) and lines[k].startswith("#"):
        for tok in lines[k][1:].split():
            if "=" in tok:
                key, value = tok.split("=", 1)
                meta[key] = value
        k += 1
    if k >= len(lines) or lines[k] != "frequency_hz,class,mean,lo95,hi95,significance":
        raise ParseError(f"{path}: not a spectral report", line=k + 1)
    body = lines[k + 1 :]
    freqs, mean, lo, hi, sig = [], [[], []], [[], []], [[], []], []
    for r, line in enumerate(body):
        cells = line.split(",")
        if len(cells) != 6 or cells[1] not in ("NonSlip", "Slip"):
            raise ParseError(f"{path}: malformed row", line=k + 2 + r)
        cls = 0 if cells[1] == "NonSlip" else 1
        try:
            vals = [float(c) for c in (cells[0], cells[2], cells[3], cells[4], cells[5])]
        except ValueError:
            raise ParseError(f"{path}: non-numeric value", line=k + 2 + r) from None
        if cls == 0:
            freqs.append(vals[0])
            sig.append(vals[4])
        mean[cls].append(vals[1])
        lo[cls].append(vals[2])
        hi[cls].append(vals[3])
    return SpectralReport(
        np.asarray(freqs), np.asarray(mean), np.asarray(lo), np.asarray(hi), np.asarray(sig),
        int(meta.get("n_bootstrap", 0)), int(meta.get("n_repetitions", 0)),
        float(meta.get("fs", 2 * (freqs[-1] if freqs else 0))), int(meta.get("sequence_length", 0)),
        int(meta.get("seed", 0)),
    )


def plot_spectral_report(report: SpectralReport, path, overwrite: bool = False) -> None:
    """SVG: class means with shaded 95 % bands (log scale) and the significance trace."""
    path = Path(path)
    if path.exists() and not overwrite:
        raise FileExistsError(f"{path} exists")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4))
    f = report.frequencies
    for cls, color, name in ((0, "tab:blue", "non-slip"), (1, "tab:red", "slip")):
        ax.fill_between(f, report.lo95[cls], report.hi95[cls], color=color, alpha=0.2, linewidth=0)
        ax.plot(f, report.mean[cls], color=color, label=name)
    ax.set_yscale("log")
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("amplitude")
    ax2 = ax.twinx()
    ax2.plot(f, report.significance, color="tab:green", label="significance")
    ax2.set_ylim(0, 1.05)
    ax2.set_ylabel("significance")
    ax.legend(loc="upper right")
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_eval_report(report: EvalReport, path, extra: dict | None = None, overwrite: bool = False) -> None:
    buf = _io.StringIO()
    for key, value in (extra or {}).items():
        buf.write(f"# {key}={value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scope", "scenario", "material", "speed_mm_s", "metric", "value"])
    for name in ("accuracy", "tp_rate", "tn_rate"):
        w.writerow(["all", "", "", "", name, _g(getattr(report, name))])
    for name, v in zip(("tn", "fp", "fn", "tp"), report.confusion.ravel()):
        w.writerow(["all", "", "", "", name, int(v)])
    for (scenario, material, speed), acc in report.factor_breakdown.items():
        w.writerow(["cell", scenario.value, material.value, _g(speed), "accuracy", _g(acc)])
    _write_text(path, buf.getvalue(), overwrite)


def save_model(model: LstmModel, path, overwrite: bool = False) -> None:
    _write_text(path, json.dumps(model.to_dict(), indent=1) + "\n", overwrite)


def load_model(path) -> LstmModel:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    return LstmModel.from_dict(d)


_THRESHOLD_HEADER = "band_low_hz,band_high_hz,threshold,window_size,sampling_rate_hz"


def save_threshold_model(model: ThresholdModel, path, overwrite: bool = False) -> None:
    row = [_g(model.band.low_hz), _g(model.band.high_hz), _g(model.threshold), str(model.window_size), _g(model.sampling_rate_hz)]
    _write_text(path, _THRESHOLD_HEADER + "\n" + ",".join(row) + "\n", overwrite)


def load_threshold_model(path) -> ThresholdModel:
    lines = [ln for ln in _read_lines(path) if not ln.startswith("#")]
    if len(lines) != 2 or lines[0] != _THRESHOLD_HEADER:
        raise ParseError(f"{path}: not a threshold model record", line=1)
    cells = lines[1].split(",")
    if len(cells) != 5:
        raise ParseError(f"{path}: expected 5 fields", line=2)
    try:
        lo, hi, t, fs = float(cells[0]), float(cells[1]), float(cells[2]), float(cells[4])
        w = int(cells[3])
    except ValueError:
        raise ParseError(f"{path}: malformed threshold record", line=2) from None
    return ThresholdModel(FrequencyBand(lo, hi), t, w, fs)


# --- run configuration -------------------------------------------------------


@dataclass(frozen=True)
class SynthSettings:
    per_cell_duration_s: float = 10.0
    sensor_ids: tuple = ("index",)
    sensor_gains: tuple = ()
    fs_hz: float = 1000.0
    channels: int = 3
    burst_center_hz: float = 65.0


@dataclass(frozen=True)
class SweepSettings:
    window_sizes: tuple = (5, 10, 25, 50, 100, 200)
    rate_factors: tuple = (2, 4, 8, 16, 32)
    base_window: int = 200


@dataclass(frozen=True)
class SpectralSettings:
    n_bootstrap: int = 100
    n_repetitions: int = 200
    threshold: float = 0.95


@dataclass(frozen=True)
class RunConfig:
    """Parsed ``key = value`` run configuration; sections are key prefixes."""

    seed: int
    window_size: int = 50
    output_dir: str = "out"
    recordings_dir: str = ""
    synth: SynthSettings = SynthSettings()
    train: TrainConfig = TrainConfig()
    sweep: SweepSettings = SweepSettings()
    spectral: SpectralSettings = SpectralSettings()
    source_text: str = field(default="", compare=False, repr=False)

    def fingerprint(self) -> str:
        canon = _canonical(self)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _canonical(cfg: RunConfig) -> str:
    parts = []
    for f in fields(cfg):
        if f.name == "source_text":
            continue
        v = getattr(cfg, f.name)
        if hasattr(v, "__dataclass_fields__"):
            for g in fields(v):
                parts.append(f"{f.name}.{g.name}={getattr(v, g.name)!r}")
        else:
            parts.append(f"{f.name}={v!r}")
    return "\n".join(parts)


def _coerce(text: str, default, key: str, lineno: int):
    try:
        if isinstance(default, bool):
            if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return text.lower() in ("true", "1", "yes")
        if isinstance(default, tuple):
            items = [t.strip() for t in text.split(",") if t.strip()]
            if key == "sensor_gains":
                return tuple((a.strip(), float(b)) for a, b in (it.split(":") for it in items))
            proto = default[0] if default else None
            if isinstance(proto, int) and not isinstance(proto, bool):
                return tuple(int(t) for t in items)
            if isinstance(proto, float):
                return tuple(float(t) for t in items)
            return tuple(items)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float) or default is None:
            if text.lower() in ("none", ""):
                return None
            return float(text)
        return text
    except ValueError:
        raise ParseError(f"bad value {text!r} for {key!r}", line=lineno) from None


_SECTIONS = {"synth": SynthSettings, "train": TrainConfig, "sweep": SweepSettings, "spectral": SpectralSettings}


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines (``#`` comments); unknown keys are rejected."""
    top = {}
    sections = {name: {} for name in _SECTIONS}
    top_fields = {f.name: f for f in fields(RunConfig) if f.name not in _SECTIONS and f.name != "source_text"}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if "." in key:
            sec, name = key.split(".", 1)
            if sec not in _SECTIONS:
                raise ParseError(f"unknown section {sec!r}", line=lineno)
            proto = {f.name: f for f in fields(_SECTIONS[sec])}
            if name not in proto:
                raise ParseError(f"unknown key {key!r}", line=lineno)
            default = getattr(_SECTIONS[sec](), name)
            if sec == "train" and name == "lr_schedule":
                default = (0.1,)
            sections[sec][name] = _coerce(value, default, name, lineno)
        else:
            if key not in top_fields:
                raise ParseError(f"unknown key {key!r}", line=lineno)
            default = 0 if key == "seed" else top_fields[key].default
            top[key] = _coerce(value, default, key, lineno)
    if "seed" not in top:
        raise ParseError("run configuration must set 'seed' explicitly")
    train_kw = sections["train"]
    train_kw.setdefault("seed", top["seed"])
    try:
        return RunConfig(
            **top,
            synth=SynthSettings(**sections["synth"]),
            train=TrainConfig(**train_kw),
            sweep=SweepSettings(**sections["sweep"]),
            spectral=SpectralSettings(**sections["spectral"]),
            source_text=text,
        )
    except ValueError as exc:
        raise ParseError(f"invalid configuration: {exc}") from None


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
