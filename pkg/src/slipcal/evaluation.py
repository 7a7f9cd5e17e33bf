"""Accuracy scoring and the measurement sweeps.

Sweeps cover window size, sampling rate (dyadic decimation), material or
speed exclusion, and cross-sensor transfer. Every sweep is a pure function
of (recordings, config, seed): row seeds are derived from the root seed and
the row's setting, and each row trains a fresh model.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .balance import (
    _allocate,
    WindowedDataset,
    build_balanced,
    cell_sort_key,
    rebalance,
    split_train_test,
)
from .errors import IndivisibleWindow, PreconditionError, WindowSizeMismatch
from .lstm import TrainConfig, train
from .recording import Label, Material, Recording, Scenario
from .seeds import derive_seed

__all__ = [
    "EvalReport",
    "SweepAxis",
    "SweepRow",
    "SweepReport",
    "evaluate",
    "downsample_windows",
    "level_pool",
    "sweep_window_sizes",
    "sweep_sampling_rates",
    "exclusion_sweep",
    "transfer_matrix",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalReport:
    """Confusion counts are ``[[TN, FP], [FN, TP]]`` (rows: true class, cols: predicted)."""

    accuracy: float
    tp_rate: float
    tn_rate: float
    confusion: np.ndarray
    factor_breakdown: dict

    @property
    def total(self) -> int:
        return int(self.confusion.sum())


def _rate(num, den):
    return num / den if den else float("nan")


def report_from_predictions(labels, predictions, provenance=None) -> EvalReport:
    labels = np.asarray(labels, dtype=np.int64)
    pred = np.asarray(predictions, dtype=np.int64)
    conf = np.zeros((2, 2), dtype=np.int64)
    np.add.at(conf, (labels, pred), 1)
    tn, fp, fn, tp = conf.ravel()
    breakdown = {}
    if provenance is not None:
        hits = defaultdict(lambda: [0, 0])
        for p, ok in zip(provenance, labels == pred):
            key = (p.scenario, p.material, p.speed_mm_s)
            hits[key][0] += int(ok)
            hits[key][1] += 1
        breakdown = {k: v[0] / v[1] for k, v in sorted(hits.items(), key=lambda kv: cell_sort_key((Label.SLIP if kv[0][0] is Scenario.SLIP else Label.NONSLIP,) + kv[0]))}
    return EvalReport(
        accuracy=_rate(tp + tn, conf.sum()),
        tp_rate=_rate(tp, tp + fn),
        tn_rate=_rate(tn, tn + fp),
        confusion=conf,
        factor_breakdown=breakdown,
    )


def evaluate(model, test: WindowedDataset) -> EvalReport:
    """Score any model exposing ``predict(samples) -> labels`` on a windowed test set."""
    expected = getattr(model, "window_size", None)
    if expected is not None and int(expected) != test.window_size:
        raise WindowSizeMismatch(f"model expects windows of {expected}, test set has {test.window_size}")
    pred = model.predict(test.samples) if len(test) else np.empty(0, dtype=np.int64)
    return report_from_predictions(test.labels, pred, test.provenance)


def downsample_windows(dataset: WindowedDataset, factor: int, phase: int | str = 0, seed: int = 0) -> WindowedDataset:
    """Keep every ``factor``-th sample of each window.

    The kept length is ``floor(W / factor)``; any tail remainder is dropped.
    ``phase`` is the index of the first kept sample, or ``"random"`` for a
    seeded per-window phase in ``[0, factor)``.
    """
    factor = int(factor)
    if factor < 1 or factor & (factor - 1):
        raise ValueError(f"factor must be a power of two, got {factor}")
    if factor == 1:
        return dataset
    keep = dataset.window_size // factor
    if keep < 1:
        raise IndivisibleWindow(f"window of {dataset.window_size} samples cannot be decimated by {factor}")
    if phase == "random":
        rng = np.random.default_rng(seed)
        offs = rng.integers(0, factor, size=len(dataset))
        idx = offs[:, None] + factor * np.arange(keep)[None, :]
        samples = np.take_along_axis(dataset.samples, idx, axis=1)
    else:
        phase = int(phase)
        if not 0 <= phase < factor:
            raise ValueError("phase must lie in [0, factor)")
        samples = dataset.samples[:, phase::factor][:, :keep]
    return WindowedDataset(
        samples,
        dataset.labels,
        dataset.provenance,
        keep,
        dataset.sampling_rate_hz / factor,
        (),
        dataset.seed,
    )


class SweepAxis(str, Enum):
    WINDOW_SIZE = "WindowSize"
    SAMPLING_RATE = "SamplingRate"
    MATERIAL = "Material"
    SPEED = "Speed"
    TRANSFER = "Transfer"


@dataclass(frozen=True)
class SweepRow:
    setting: object
    variant: str
    report: EvalReport


@dataclass
class SweepReport:
    axis: SweepAxis
    rows: list
    seed: int
    config_fingerprint: str
    notes: str = ""

    def accuracy(self, setting, variant=None) -> float:
        for row in self.rows:
            if row.setting == setting and (variant is None or row.variant == variant):
                return row.report.accuracy
        raise KeyError((setting, variant))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# axis={self.axis.value} seed={self.seed} config={self.config_fingerprint}\n")
        if self.notes:
            buf.write(f"# {self.notes}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["axis", "setting", "variant", "accuracy", "tp_rate", "tn_rate", "tn", "fp", "fn", "tp"])
        for r in self.rows:
            tn, fp, fn, tp = r.report.confusion.ravel()
            w.writerow([
                self.axis.value, _fmt_setting(r.setting), r.variant,
                f"{r.report.accuracy:.17g}", f"{r.report.tp_rate:.17g}", f"{r.report.tn_rate:.17g}",
                tn, fp, fn, tp,
            ])
        return buf.getvalue()

    def to_table(self) -> str:
        """Aligned text table: one line per variant, one column per setting (accuracy in %)."""
        settings = list(dict.fromkeys(r.setting for r in self.rows))
        variants = list(dict.fromkeys(r.variant for r in self.rows))
        cells = {(r.setting, r.variant): r.report.accuracy for r in self.rows}
        head = [self.axis.value] + [_fmt_setting(s) for s in settings]
        lines = [head]
        for v in variants:
            lines.append([v] + [f"{100 * cells[(s, v)]:.1f}" if (s, v) in cells else "NA" for s in settings])
        widths = [max(len(line[c]) for line in lines) for c in range(len(head))]
        return "\n".join("  ".join(x.rjust(wd) if c else x.ljust(wd) for c, (x, wd) in enumerate(zip(line, widths))) for line in lines) + "\n"


def _fmt_setting(s) -> str:
    if isinstance(s, Enum):
        return str(s.value)
    if isinstance(s, float):
        return f"{s:g}"
    return str(s)


def _map(fn: Callable, items: Sequence, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _fit_and_score(args):
    train_set, test_sets, config = args
    model, _ = train(train_set, config)
    return [evaluate(model, t) for t in test_sets]


def _row_config(config: TrainConfig, seed: int, *parts) -> TrainConfig:
    return replace(config, seed=derive_seed(seed, "train", *parts))


def _balanced_split(recordings, window_size: int, seed: int, *parts):
    ds = build_balanced(recordings, window_size, derive_seed(seed, "balance", window_size, *parts))
    return split_train_test(ds, derive_seed(seed, "split", window_size, *parts))


def sweep_window_sizes(
    recordings: Sequence[Recording],
    sizes: Sequence[int] = (5, 10, 25, 50, 100, 200),
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
    jobs: int = 1,
) -> SweepReport:
    """Rebuild, retrain and test at each window size; rows sorted by size."""
    sizes = sorted(int(s) for s in sizes)
    jobs_args = []
    for w in sizes:
        tr, te = _balanced_split(recordings, w, seed)
        jobs_args.append((tr, [te], _row_config(config, seed, "window", w)))
    results = _map(_fit_and_score, jobs_args, jobs)
    rows = [SweepRow(w, "lstm", res[0]) for w, res in zip(sizes, results)]
    return SweepReport(SweepAxis.WINDOW_SIZE, rows, seed, config.fingerprint())


def sweep_sampling_rates(
    recordings: Sequence[Recording],
    factors: Sequence[int] = (2, 4, 8, 16, 32),
    base_window: int = 200,
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
    jobs: int = 1,
) -> SweepReport:
    """Decimate one balanced split by each factor, retrain and test; settings are effective rates (Hz)."""
    tr, te = _balanced_split(recordings, base_window, seed)
    fs = tr.sampling_rate_hz
    jobs_args = [
        (downsample_windows(tr, f), [downsample_windows(te, f)], _row_config(config, seed, "rate", f))
        for f in factors
    ]
    results = _map(_fit_and_score, jobs_args, jobs)
    rows = [SweepRow(fs / f, "lstm", res[0]) for f, res in zip(factors, results)]
    return SweepReport(SweepAxis.SAMPLING_RATE, rows, seed, config.fingerprint(), notes=f"base_window={base_window}")


def _take_even(groups: dict, total: int) -> list:
    """``total`` indices spread evenly over groups, taking the first ones of each."""
    keys = sorted(groups, key=cell_sort_key)
    total = min(total, sum(len(groups[k]) for k in keys))
    if total <= 0:
        return []
    take = _allocate([len(groups[k]) for k in keys], total)
    return [i for k, n in zip(keys, take) for i in groups[k][:n]]


def level_pool(test: WindowedDataset, axis: SweepAxis, level) -> WindowedDataset:
    """Balanced test pool for one material or slip speed.

    Slip windows at the level, matched by an equal number of non-slip windows.
    For a material, that is the push windows on that material topped up with
    an even free-space share. For a speed, non-slip windows are drawn evenly
    from every non-slip cell (push materials and free-space speeds).
    """
    slip_idx = []
    push_groups, free_groups, ns_groups = defaultdict(list), defaultdict(list), defaultdict(list)
    for k, p in enumerate(test.provenance):
        if p.scenario is Scenario.SLIP:
            hit = p.material == level if axis is SweepAxis.MATERIAL else p.speed_mm_s == float(level)
            if hit:
                slip_idx.append(k)
        else:
            ns_groups[p.cell].append(k)
            if p.scenario is Scenario.PUSH:
                push_groups[p.cell].append(k)
            else:
                free_groups[p.cell].append(k)
    n = len(slip_idx)
    if axis is SweepAxis.MATERIAL:
        own = [k for cell, ks in push_groups.items() if cell[2] == level for k in ks][: n // 2]
        ns = own + _take_even(free_groups, n - len(own))
    else:
        ns = _take_even(ns_groups, n)
    return test.subset(sorted(slip_idx + ns))


def exclusion_sweep(
    recordings: Sequence[Recording],
    axis: SweepAxis | str,
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
    window_size: int = 50,
    jobs: int = 1,
) -> SweepReport:
    """Per level: accuracy of the all-data model and of a model trained without that level.

    Both are scored on the same level-only pool drawn from the held-out half.
    The reduced training set is the all-data training half minus every window
    recorded at the level, re-trimmed to exact proportions.
    """
    axis = SweepAxis(axis)
    if axis not in (SweepAxis.MATERIAL, SweepAxis.SPEED):
        raise ValueError("exclusion sweeps run over Material or Speed")
    slip = [r for r in recordings if r.scenario is Scenario.SLIP]
    if axis is SweepAxis.MATERIAL:
        levels = sorted({r.material for r in slip}, key=list(Material).index)
    else:
        levels = sorted({r.speed_mm_s for r in slip})
    if len(levels) < 2:
        raise PreconditionError(f"exclusion along {axis.value} needs at least two levels, found {len(levels)}")

    tr, te = _balanced_split(recordings, window_size, seed)
    pools = [level_pool(te, axis, lv) for lv in levels]

    def drops(p, lv):
        return p.material == lv if axis is SweepAxis.MATERIAL else p.speed_mm_s == float(lv)

    jobs_args = [(tr, pools, _row_config(config, seed, "exclusion", axis.value, "all"))]
    for lv in levels:
        reduced = rebalance(tr.where(lambda p, lv=lv: not drops(p, lv)))
        jobs_args.append((reduced, [pools[levels.index(lv)]], _row_config(config, seed, "exclusion", axis.value, lv)))
    results = _map(_fit_and_score, jobs_args, jobs)
    rows = []
    for j, lv in enumerate(levels):
        rows.append(SweepRow(lv, "with", results[0][j]))
        rows.append(SweepRow(lv, "without", results[1 + j][0]))
    note = (
        "material pools: slip at the material + its push windows + an even free-space share"
        if axis is SweepAxis.MATERIAL
        else "speed pools: slip at the speed + an even share of every non-slip cell"
    )
    return SweepReport(axis, rows, seed, config.fingerprint(), notes=note)


def transfer_matrix(
    recordings: Sequence[Recording],
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
    window_size: int = 50,
    jobs: int = 1,
) -> SweepReport:
    """Train per sensor id (and on all ids combined); test every model on every id.

    Rows: setting = test set (sensor id or "combined"), variant = training source.
    The combined split is the union of the per-sensor splits, so no window is
    ever in both a training and a test set.
    """
    by_sensor = defaultdict(list)
    for r in recordings:
        by_sensor[r.sensor_id].append(r)
    ids = sorted(by_sensor)
    if not ids:
        raise PreconditionError("no recordings")
    splits = {sid: _balanced_split(by_sensor[sid], window_size, seed, sid) for sid in ids}
    tests = {sid: splits[sid][1] for sid in ids}
    sources = {sid: splits[sid][0] for sid in ids}
    if len(ids) > 1:
        sources["combined"] = WindowedDataset.concat([splits[s][0] for s in ids], derive_seed(seed, "combine"))
        tests["combined"] = WindowedDataset.concat([splits[s][1] for s in ids])
    targets = list(tests)
    jobs_args = [
        (sources[src], [tests[t] for t in targets], _row_config(config, seed, "transfer", src)) for src in sources
    ]
    results = _map(_fit_and_score, jobs_args, jobs)
    rows = [SweepRow(t, src, rep) for src, res in zip(sources, results) for t, rep in zip(targets, res)]
    return SweepReport(SweepAxis.TRANSFER, rows, seed, config.fingerprint())
