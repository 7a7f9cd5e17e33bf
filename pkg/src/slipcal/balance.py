"""Proportion-exact windowed datasets and the stratified train/test split.

Class and factor shares follow the collection protocol: slip and non-slip
windows are equal in number; slip windows split evenly over every
(material, speed) cell; non-slip windows are half push (evenly over
materials) and half free-space (evenly over speeds, remainder assigned in
ascending speed order).
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyDataset, InsufficientData, MissingCell, WindowTooLarge
from .recording import Label, Material, Provenance, Recording, Scenario

__all__ = [
    "Run",
    "LabeledWindow",
    "WindowedDataset",
    "build_balanced",
    "assemble_balanced",
    "split_train_test",
    "rewindow",
    "rebalance",
    "window_capacity",
    "cell_sort_key",
]

_MATERIAL_ORDER = {m: k for k, m in enumerate(Material)}
_SCENARIO_ORDER = {Scenario.SLIP: 0, Scenario.PUSH: 1, Scenario.FREESPACE: 2}


def cell_sort_key(cell):
    label, scenario, material, speed = cell
    return (-int(label), _SCENARIO_ORDER[scenario], _MATERIAL_ORDER[material], speed)


@dataclass(frozen=True, eq=False)
class Run:
    """A contiguous collapsed signal from one recording."""

    signal: np.ndarray
    provenance: Provenance


@dataclass(frozen=True)
class LabeledWindow:
    samples: np.ndarray
    label: Label
    provenance: Provenance


@dataclass(eq=False)
class WindowedDataset:
    """Fixed-length labeled windows stored as a (n, W) array.

    ``runs`` keeps the contiguous source signals so the dataset can be
    re-cut at another window size; split halves do not carry them.
    """

    samples: np.ndarray
    labels: np.ndarray
    provenance: tuple
    window_size: int
    sampling_rate_hz: float
    runs: tuple = ()
    seed: int | None = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float).reshape(-1, self.window_size)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.provenance = tuple(self.provenance)
        if not (self.samples.shape[0] == self.labels.shape[0] == len(self.provenance)):
            raise ValueError("samples, labels and provenance disagree in length")

    def __len__(self):
        return self.samples.shape[0]

    def __getitem__(self, k) -> LabeledWindow:
        return LabeledWindow(self.samples[k], Label(int(self.labels[k])), self.provenance[k])

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    @property
    def ledger(self) -> Counter:
        """Window counts per (label, scenario, material, speed)."""
        return Counter(p.cell for p in self.provenance)

    def class_counts(self) -> tuple[int, int]:
        n_slip = int(np.count_nonzero(self.labels == Label.SLIP))
        return len(self) - n_slip, n_slip

    def subset(self, indices, keep_runs: bool = False) -> "WindowedDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return WindowedDataset(
            self.samples[idx],
            self.labels[idx],
            tuple(self.provenance[i] for i in idx),
            self.window_size,
            self.sampling_rate_hz,
            self.runs if keep_runs else (),
            self.seed,
        )

    def where(self, predicate) -> "WindowedDataset":
        """Windows whose provenance satisfies ``predicate``, in dataset order."""
        return self.subset([k for k, p in enumerate(self.provenance) if predicate(p)])

    @classmethod
    def concat(cls, parts: Sequence["WindowedDataset"], seed: int | None = None) -> "WindowedDataset":
        """Concatenate datasets of equal window size; shuffle windows when ``seed`` is given."""
        if not parts:
            raise EmptyDataset("nothing to concatenate")
        w = parts[0].window_size
        fs = parts[0].sampling_rate_hz
        if any(p.window_size != w or p.sampling_rate_hz != fs for p in parts):
            raise ValueError("datasets differ in window size or sampling rate")
        out = cls(
            np.concatenate([p.samples for p in parts]),
            np.concatenate([p.labels for p in parts]),
            tuple(x for p in parts for x in p.provenance),
            w,
            fs,
            tuple(r for p in parts for r in p.runs),
            seed,
        )
        if seed is not None:
            out = out.subset(np.random.default_rng(seed).permutation(len(out)), keep_runs=True)
        return out


def window_capacity(runs: Iterable[Run], window_size: int) -> Counter:
    """Non-overlapping windows available per cell before trimming."""
    cap = Counter()
    for r in runs:
        cap[r.provenance.cell] += r.signal.shape[0] // window_size
    return cap


def _runs_from_recordings(recordings: Iterable[Recording]) -> tuple[tuple, float]:
    runs = []
    rates = set()
    for rec in recordings:
        rates.add(float(rec.sampling_rate_hz))
        runs.append(Run(rec.collapse().samples, rec.provenance))
    if not runs:
        raise EmptyDataset("no recordings given")
    if len(rates) != 1:
        raise ValueError(f"recordings mix sampling rates: {sorted(rates)}")
    return tuple(runs), rates.pop()


def _free_targets(total: int, speeds: Sequence[float]) -> dict:
    base, rem = divmod(total, len(speeds))
    return {s: base + (1 if k < rem else 0) for k, s in enumerate(speeds)}


def _targets_for(k: int, materials, slip_speeds, free_speeds) -> dict:
    n_slip = len(materials) * len(slip_speeds) * k
    push_each = n_slip // 2 // len(materials)
    targets = {}
    for m in materials:
        for s in slip_speeds:
            targets[(Label.SLIP, Scenario.SLIP, m, s)] = k
        targets[(Label.NONSLIP, Scenario.PUSH, m, 0.0)] = push_each
    for s, n in _free_targets(n_slip // 2, free_speeds).items():
        targets[(Label.NONSLIP, Scenario.FREESPACE, Material.NONE, s)] = n
    return targets


def _allocate(capacities: Sequence[int], target: int) -> list[int]:
    """Split ``target`` windows over runs as evenly as capacities allow."""
    take = [0] * len(capacities)
    left = target
    while left > 0:
        open_ = [k for k, c in enumerate(capacities) if take[k] < c]
        if not open_:
            raise InsufficientData(f"cannot allocate {target} windows from capacities {list(capacities)}")
        share, extra = divmod(left, len(open_))
        for j, k in enumerate(open_):
            got = min(share + (1 if j < extra else 0), capacities[k] - take[k])
            take[k] += got
            left -= got
    return take


def _solve_targets(cap: Counter) -> dict:
    """Exact per-cell window targets for the levels present in ``cap``.

    The slip count per (material, speed) cell is kept even so every cell
    halves cleanly in the train/test split.
    """
    slip = [c for c in cap if c[1] is Scenario.SLIP]
    push = [c for c in cap if c[1] is Scenario.PUSH]
    free = [c for c in cap if c[1] is Scenario.FREESPACE]
    if not slip:
        raise MissingCell("no slip data")
    if not free:
        raise MissingCell("no free-space data")
    materials = sorted({c[2] for c in slip} | {c[2] for c in push}, key=_MATERIAL_ORDER.get)
    slip_speeds = sorted({c[3] for c in slip})
    free_speeds = sorted({c[3] for c in free})

    required = sorted(_targets_for(2, materials, slip_speeds, free_speeds), key=cell_sort_key)
    for cell in required:
        if cell not in cap:
            raise MissingCell(f"no recording for cell {_fmt_cell(cell)}")
    for cell in required:
        if cap[cell] < 1:
            raise InsufficientData(f"cell {_fmt_cell(cell)} cannot supply a single window")

    k = 2 * (min(cap[c] for c in required if c[1] is Scenario.SLIP) // 2)
    while k > 0:
        targets = _targets_for(k, materials, slip_speeds, free_speeds)
        if all(cap[c] >= n for c, n in targets.items()):
            return targets
        k -= 2
    raise InsufficientData("not enough windows to fill every cell in proportion")


def assemble_balanced(runs: Sequence[Run], window_size: int, sampling_rate_hz: float, seed: int) -> WindowedDataset:
    """Cut runs into windows and trim every cell to its exact target count."""
    window_size = int(window_size)
    if window_size < 1:
        raise ValueError("window size must be positive")
    runs = tuple(runs)
    if not runs:
        raise EmptyDataset("no runs given")
    shortest = min(r.signal.shape[0] for r in runs)
    if window_size > shortest:
        raise WindowTooLarge(f"window size {window_size} exceeds the shortest run ({shortest} samples)")

    by_cell = defaultdict(list)
    for k, r in enumerate(runs):
        by_cell[r.provenance.cell].append(k)
    for ks in by_cell.values():
        ks.sort(key=lambda k: (runs[k].provenance.sensor_id, runs[k].provenance.finger.value, k))
    targets = _solve_targets(window_capacity(runs, window_size))

    slip_sel, nonslip_sel = [], []
    for cell in sorted(targets, key=cell_sort_key):
        members = by_cell[cell]
        take = _allocate([runs[j].signal.shape[0] // window_size for j in members], targets[cell])
        dest = slip_sel if cell[0] is Label.SLIP else nonslip_sel
        for j, n in zip(members, take):
            dest.extend((j, w * window_size) for w in range(n))

    rng = np.random.default_rng(seed)
    slip_sel = [slip_sel[i] for i in rng.permutation(len(slip_sel))]
    nonslip_sel = [nonslip_sel[i] for i in rng.permutation(len(nonslip_sel))]
    order = slip_sel + nonslip_sel
    order = [order[i] for i in rng.permutation(len(order))]

    samples = np.empty((len(order), window_size))
    for row, (j, start) in enumerate(order):
        samples[row] = runs[j].signal[start : start + window_size]
    prov = tuple(runs[j].provenance for j, _ in order)
    labels = np.fromiter((p.label for p in prov), dtype=np.int64, count=len(prov))
    return WindowedDataset(samples, labels, prov, window_size, sampling_rate_hz, runs, seed)


def rebalance(dataset: WindowedDataset) -> WindowedDataset:
    """Trim an existing dataset to exact proportions over the levels it contains.

    Each cell keeps its first windows in dataset order. Used after dropping a
    factor level from an already balanced set.
    """
    targets = _solve_targets(dataset.ledger)
    seen = Counter()
    keep = []
    for k, p in enumerate(dataset.provenance):
        cell = p.cell
        if seen[cell] < targets.get(cell, 0):
            keep.append(k)
            seen[cell] += 1
    return dataset.subset(keep)


def build_balanced(recordings: Iterable[Recording], window_size: int, seed: int) -> WindowedDataset:
    """Collapse recordings, cut non-overlapping windows and enforce the class/factor ledger."""
    runs, fs = _runs_from_recordings(recordings)
    return assemble_balanced(runs, window_size, fs, seed)


def rewindow(dataset: WindowedDataset, new_window_size: int) -> WindowedDataset:
    """Re-cut the stored contiguous runs at a new window size."""
    if new_window_size == dataset.window_size:
        return dataset
    if not dataset.runs:
        raise ValueError("dataset carries no source runs to re-cut (split halves cannot be rewindowed)")
    return assemble_balanced(dataset.runs, new_window_size, dataset.sampling_rate_hz, dataset.seed)


def split_train_test(dataset: WindowedDataset, seed: int) -> tuple[WindowedDataset, WindowedDataset]:
    """Stratified 50/50 split per ledger cell.

    An odd cell puts its extra window in train; further odd cells of the same
    class alternate test, train, ... so the class totals stay equal.
    """
    rng = np.random.default_rng(seed)
    by_cell = defaultdict(list)
    for k, p in enumerate(dataset.provenance):
        by_cell[p.cell].append(k)
    odd_seen = Counter()
    train, test = [], []
    for cell in sorted(by_cell, key=cell_sort_key):
        idx = np.asarray(by_cell[cell])
        idx = idx[rng.permutation(idx.size)]
        n_train = idx.size // 2
        if idx.size % 2:
            if odd_seen[cell[0]] % 2 == 0:
                n_train += 1
            odd_seen[cell[0]] += 1
        train.extend(idx[:n_train])
        test.extend(idx[n_train:])
    return dataset.subset(sorted(train)), dataset.subset(sorted(test))


def _fmt_cell(cell) -> str:
    label, scenario, material, speed = cell
    return f"{scenario.value}/{material.value}/{speed:g} mm/s"
