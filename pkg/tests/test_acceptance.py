"""Acceptance suite: one test per criterion, each at its stated tolerance.

A summary line per criterion is printed at the end of the pytest run.
"""

import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from slipcal.balance import build_balanced, split_train_test
from slipcal.baseline import fit_threshold_model
from slipcal.cli import cli_main
from slipcal.evaluation import (
    evaluate,
    sweep_sampling_rates,
    sweep_window_sizes,
    transfer_matrix,
)
from slipcal.io import RunConfig, SynthSettings
from slipcal.lstm import LstmModel, TrainConfig, bptt_gradients, predict_proba, train
from slipcal.pipeline import balanced_split, spectral_report, synth_corpus
from slipcal.recording import Label, Scenario
from slipcal.spectral import (
    amplitude_spectrum,
    ks_two_sample,
    most_significant_band,
    single_sided_amplitude,
)
from slipcal.synth import generate_corpus

from oracles import brute_ks, fd_gradients, max_rel_error, parseval_energy


# ---------------------------------------------------------------- 1


def test_criterion_01_gradient_oracle(criterion):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for k in range(20):
        n = int(rng.integers(1, 9))
        w = int(rng.integers(1, 26))
        model = LstmModel.initialize(n, init_scale=float(rng.uniform(0.1, 1.0)), seed=100 + k)
        seq = rng.normal(size=w)
        label = Label(int(rng.integers(0, 2)))
        worst = max(worst, max_rel_error(bptt_gradients(model, seq, label), fd_gradients(model, seq, label)))
    elapsed = time.perf_counter() - start
    criterion(worst <= 1e-5 and elapsed < 30, f"max rel error {worst:.2e} over 20 instances in {elapsed:.1f} s")


# ---------------------------------------------------------------- 2


def test_criterion_02_spectral_oracles(criterion):
    rng = np.random.default_rng(7)
    parseval = []
    for length in (50, 850, 1000, 4096):
        x = rng.normal(size=length)
        amp = single_sided_amplitude(x)
        parseval.append(abs(parseval_energy(amp, length) - np.sum(x**2)) / np.sum(x**2))
    t = np.arange(1000) / 1000.0
    spec = amplitude_spectrum(1.7 * np.sin(2 * np.pi * 60.0 * t + 0.3), 1000.0)
    k = int(np.argmax(spec.amplitudes))
    sine_err = abs(spec.amplitudes[k] - 1.7)
    ok = max(parseval) <= 1e-9 and spec.frequencies[k] == 60.0 and sine_err <= 1e-9
    criterion(ok, f"Parseval rel err {max(parseval):.1e}; 60 Hz amplitude err {sine_err:.1e}")


# ---------------------------------------------------------------- 3


def test_criterion_03_ks_oracle(criterion):
    rng = np.random.default_rng(11)
    exact = 0
    for _ in range(100):
        n, m = (int(v) for v in rng.integers(5, 201, size=2))
        # coarse values so ties across the samples are common
        a = np.round(rng.normal(size=n), 1)
        b = np.round(rng.normal(0.2, 1.0, size=m), 1)
        exact += ks_two_sample(a, b)[0] == brute_ks(a.tolist(), b.tolist())
    never = all(ks_two_sample(x, x.copy())[1] == 0 for x in (rng.normal(size=s) for s in (5, 50, 200)))
    always = all(
        ks_two_sample(rng.uniform(0, 1, 100), rng.uniform(1.5, 2.5, 100))[1] == 1 for _ in range(20)
    )
    criterion(exact == 100 and never and always, f"{exact}/100 exact; identical never reject: {never}; disjoint always reject: {always}")


# ---------------------------------------------------------------- 4


def _ledger_holds(ds) -> bool:
    led = ds.ledger
    n_ns, n_s = ds.class_counts()
    slip = {c: n for c, n in led.items() if c[1] is Scenario.SLIP}
    materials = {c[2] for c in slip}
    speeds = {c[3] for c in slip}
    per_m = Counter()
    for c, n in slip.items():
        per_m[c[2]] += n
    push = [n for c, n in led.items() if c[1] is Scenario.PUSH]
    free = [n for c, n in led.items() if c[1] is Scenario.FREESPACE]
    return (
        n_s == n_ns > 0
        and all(Fraction(v, n_s) == Fraction(1, 5) for v in per_m.values())
        and len(materials) == 5
        and all(Fraction(n, per_m[c[2]]) == Fraction(1, 4) for c, n in slip.items())
        and len(speeds) == 4
        and Fraction(sum(push), n_ns) == Fraction(1, 2)
        and len(push) == 5
        and len(set(push)) == 1
        and sum(free) == n_ns - sum(push)
        and max(free) - min(free) <= 1
    )


def test_criterion_04_balance_exactness(criterion):
    checked = 0
    failures = []
    for seed, duration, w in [(0, 0.6, 5), (1, 1.0, 25), (2, 2.0, 50), (3, 3.3, 100), (4, 4.0, 200), (5, 1.7, 13)]:
        recs = generate_corpus(per_cell_duration_s=duration, seed=seed, largest_window=w)
        ds = build_balanced(recs, w, seed=seed)
        checked += 1
        if not _ledger_holds(ds):
            failures.append((seed, w))
        tr, te = split_train_test(ds, seed)
        # the split keeps both halves class balanced and partitions the windows
        if len(tr) + len(te) != len(ds) or tr.class_counts()[0] != tr.class_counts()[1]:
            failures.append((seed, w, "split"))
    criterion(not failures, f"{checked} generated corpora counted; violations: {failures or 'none'}")


# ---------------------------------------------------------------- 5 to 8
# Trends on the default synthetic corpus with the default training config.
# One root seed, fixed up front; every stage derives its own stream from it.

ROOT_SEED = 1
BURST_CENTER_HZ = 65.0


@pytest.fixture(scope="module")
def default_corpus():
    return synth_corpus(SynthSettings(), ROOT_SEED)


def test_criterion_05_end_to_end(criterion):
    cfg = RunConfig(seed=ROOT_SEED, train=TrainConfig(seed=ROOT_SEED))
    start = time.perf_counter()
    recs = synth_corpus(cfg.synth, cfg.seed)
    tr, te = balanced_split(recs, cfg.window_size, cfg.seed)
    model, _ = train(tr, cfg.train)
    lstm = evaluate(model, te).accuracy
    band = most_significant_band(spectral_report(recs, cfg.seed), cfg.spectral.threshold)
    base = evaluate(fit_threshold_model(tr, band), te).accuracy
    elapsed = time.perf_counter() - start
    ok = lstm >= 0.90 and base <= lstm - 0.05 and elapsed <= 600
    criterion(
        ok,
        f"LSTM {100 * lstm:.1f}%, threshold baseline {100 * base:.1f}% "
        f"(band {band.low_hz:g}-{band.high_hz:g} Hz), {elapsed:.0f} s",
    )


def test_criterion_06_window_size_trend(criterion, default_corpus):
    rep = sweep_window_sizes(default_corpus, [5, 50], TrainConfig(), ROOT_SEED)
    a5, a50 = rep.accuracy(5), rep.accuracy(50)
    criterion(a50 - a5 >= 0.05, f"W=5 {100 * a5:.1f}%, W=50 {100 * a50:.1f}%")


def test_criterion_07_sampling_rate_trend(criterion, default_corpus):
    factors = [2, 4, 8, 16, 32]
    rep = sweep_sampling_rates(default_corpus, factors, 200, TrainConfig(), ROOT_SEED)
    rates = [1000.0 / f for f in factors]
    acc = [rep.accuracy(r) for r in rates]
    drops = [hi - lo for hi, lo in zip(acc, acc[1:])]
    # the first rate whose Nyquist lies below the burst centre frequency
    first_below = next(i for i, r in enumerate(rates) if r / 2 < BURST_CENTER_HZ)
    largest = int(np.argmax(drops))
    ok = acc[0] - acc[-1] >= 0.10 and largest + 1 == first_below
    table = ", ".join(f"{r:g} Hz {100 * a:.1f}%" for r, a in zip(rates, acc))
    criterion(
        ok,
        f"{table}; largest drop ({100 * drops[largest]:.1f} points) into {rates[largest + 1]:g} Hz, "
        f"first Nyquist below {BURST_CENTER_HZ:g} Hz at {rates[first_below]:g} Hz",
    )


def test_criterion_08_transfer_spread(criterion):
    settings = SynthSettings(sensor_ids=("index", "middle"), sensor_gains=(("middle", 1.05),))
    recs = synth_corpus(settings, ROOT_SEED)
    rep = transfer_matrix(recs, TrainConfig(), ROOT_SEED)
    per_id = {sid: rep.accuracy(sid, "combined") for sid in ("index", "middle")}
    spread = max(per_id.values()) - min(per_id.values())
    detail = ", ".join(f"{k} {100 * v:.1f}%" for k, v in per_id.items())
    criterion(spread <= 0.05, f"combined model: {detail}; spread {100 * spread:.1f} points")


# ---------------------------------------------------------------- 9


def test_criterion_09_state_reset_invariance(criterion, small_corpus):
    tr, te = balanced_split(small_corpus, 50, seed=1)
    model, _ = train(
        tr, TrainConfig(hidden_size=8, max_epochs_per_stage=3, lr_schedule=(0.01,), seed=2)
    )
    x = np.asarray(te.samples)
    perm = np.random.default_rng(3).permutation(len(x))
    base = predict_proba(model, x)
    shuffled = predict_proba(model, x[perm])
    one_by_one = np.vstack([predict_proba(model, x[i : i + 1]) for i in perm[:200]])
    same = np.array_equal(base[perm], shuffled) and np.array_equal(base[perm[:200]], one_by_one)
    criterion(same, f"{len(x)} windows permuted; predictions bitwise equal: {same}")


# ---------------------------------------------------------------- 10

DETERMINISM_CFG = """seed = 21
window_size = 50
synth.per_cell_duration_s = 2
train.hidden_size = 6
train.max_epochs_per_stage = 3
train.lr_schedule = 0.01, 0.001
spectral.n_bootstrap = 30
spectral.n_repetitions = 10
"""


def _pipeline(cfg, out):
    c = str(cfg)
    steps = [
        ["synth", "--config", c, "--out", out / "rec"],
        ["balance", "--recordings", out / "rec", "--config", c, "--out", out / "ds"],
        ["spectrum", "--recordings", out / "rec", "--config", c, "--out", out / "spec"],
        ["train", "--train", out / "ds" / "train.csv", "--config", c, "--out", out / "model"],
        ["eval", "--model", out / "model" / "model.json", "--test", out / "ds" / "test.csv", "--config", c, "--out", out / "eval"],
        ["baseline", "--train", out / "ds" / "train.csv", "--spectrum", out / "spec" / "spectrum.csv", "--config", c, "--out", out / "base"],
        ["eval", "--model", out / "base" / "threshold.csv", "--test", out / "ds" / "test.csv", "--config", c, "--out", out / "beval"],
        ["sweep", "--axis", "window", "--recordings", out / "rec", "--config", c, "--out", out / "sweep"],
    ]
    for argv in steps:
        assert cli_main([str(a) for a in argv]) == 0


def test_criterion_10_determinism(criterion, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(DETERMINISM_CFG)
    _pipeline(cfg, tmp_path / "a")
    _pipeline(cfg, tmp_path / "b")
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    differing = [str(p) for p in files if (tmp_path / "a" / p).read_bytes() != (tmp_path / "b" / p).read_bytes()]
    reports = [p for p in files if p.parts[0] in ("ds", "spec", "eval", "beval", "sweep", "base")]
    criterion(
        not differing and len(reports) >= 7,
        f"{len(files)} CSV files from two runs compared; differing: {differing or 'none'}",
    )


# ---------------------------------------------------------------- 11


def test_criterion_11_inference_budget(criterion):
    model = LstmModel.initialize(20, seed=0)
    x = np.random.default_rng(0).normal(size=(20_000, 50))
    predict_proba(model, x[:100])
    start = time.perf_counter()
    predict_proba(model, x)
    per_sample = (time.perf_counter() - start) / x.size
    criterion(per_sample <= 50e-6, f"{per_sample * 1e6:.2f} us per sample over {x.size} samples (N = 20)")
