"""Binary-classification LSTM written directly in numpy.

One LSTM layer (tanh block input and cell activation, logistic gates) feeds
two independent logistic outputs, one per class. The verdict is read at the
last timestep of a window; states start from zero for every window.
Gradients come from full back-propagation through time and training uses
momentum SGD over a decreasing sequence of learning rates.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, EmptyDataset
from .recording import Label
from .signal import NormalizationStats, fit_normalization, normalize

__all__ = [
    "PARAM_NAMES",
    "LstmModel",
    "LstmState",
    "StepTrace",
    "TrainConfig",
    "EpochRecord",
    "sigmoid",
    "forward_step",
    "forward_sequence",
    "predict_proba",
    "predict_window",
    "loss",
    "bptt_gradients",
    "batch_loss_and_gradients",
    "train",
]

log = logging.getLogger(__name__)

GATES = ("z", "i", "f", "o")
PARAM_NAMES = (
    "W_z", "W_i", "W_f", "W_o",
    "R_z", "R_i", "R_f", "R_o",
    "b_z", "b_i", "b_f", "b_o",
    "W_y", "b_y",
)
LOSS_EPS = 1e-12


def sigmoid(x):
    # tanh form avoids overflow warnings for large |x|
    return 0.5 * np.tanh(0.5 * np.asarray(x, dtype=float)) + 0.5


@dataclass(eq=False)
class LstmModel:
    W_z: np.ndarray
    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    R_z: np.ndarray
    R_i: np.ndarray
    R_f: np.ndarray
    R_o: np.ndarray
    b_z: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    W_y: np.ndarray
    b_y: np.ndarray
    norm_stats: NormalizationStats | None = None
    window_size: int | None = None
    sampling_rate_hz: float | None = None
    config_fingerprint: str = ""

    def __post_init__(self):
        for name in PARAM_NAMES:
            setattr(self, name, np.array(getattr(self, name), dtype=float))
        n, m = self.W_z.shape
        k = self.W_y.shape[0]
        expected = {"W": (n, m), "R": (n, n), "b": (n,)}
        for g in GATES:
            for kind in "WRb":
                arr = getattr(self, f"{kind}_{g}")
                if arr.shape != expected[kind]:
                    raise DimensionMismatch(f"{kind}_{g} has shape {arr.shape}, expected {expected[kind]}")
        if self.W_y.shape != (k, n) or self.b_y.shape != (k,):
            raise DimensionMismatch("output layer shapes disagree with hidden size")
        for name in PARAM_NAMES:
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} has non-finite entries")

    @property
    def hidden_size(self) -> int:
        return self.W_z.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_z.shape[1]

    @property
    def output_size(self) -> int:
        return self.W_y.shape[0]

    def params(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def with_params(self, params: dict) -> "LstmModel":
        meta = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in PARAM_NAMES}
        return LstmModel(**{name: np.array(params[name], dtype=float) for name in PARAM_NAMES}, **meta)

    def copy(self) -> "LstmModel":
        return self.with_params(self.params())

    def stacked(self):
        """Gate parameters stacked in (z, i, f, o) order: W (4N, M), R (4N, N), b (4N,)."""
        w = np.concatenate([getattr(self, f"W_{g}") for g in GATES])
        r = np.concatenate([getattr(self, f"R_{g}") for g in GATES])
        b = np.concatenate([getattr(self, f"b_{g}") for g in GATES])
        return w, r, b

    @classmethod
    def zeros(cls, hidden_size: int = 20, input_size: int = 1, output_size: int = 2) -> "LstmModel":
        n, m, k = hidden_size, input_size, output_size
        shapes = _param_shapes(n, m, k)
        return cls(**{name: np.zeros(shapes[name]) for name in PARAM_NAMES})

    @classmethod
    def initialize(
        cls,
        hidden_size: int = 20,
        input_size: int = 1,
        output_size: int = 2,
        init_scale: float = 0.5,
        seed: int | np.random.Generator = 0,
        forget_bias: float = 0.0,
    ) -> "LstmModel":
        """Uniform weights in [-init_scale, init_scale]; optional forget-gate bias offset."""
        rng = np.random.default_rng(seed)
        shapes = _param_shapes(hidden_size, input_size, output_size)
        params = {name: rng.uniform(-init_scale, init_scale, size=shapes[name]) for name in PARAM_NAMES}
        params["b_f"] = params["b_f"] + forget_bias
        return cls(**params)

    def predict(self, samples) -> np.ndarray:
        """Class labels (0 = non-slip, 1 = slip) for raw windows of shape (n, W)."""
        p = predict_proba(self, samples)
        return (p[:, 1] > p[:, 0]).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "format": "slipcal-lstm",
            "version": 1,
            "dims": {"N": self.hidden_size, "M": self.input_size, "K": self.output_size},
            "gate_order": list(GATES),
            "norm_stats": None if self.norm_stats is None else {
                "p_low": self.norm_stats.p_low,
                "p_high": self.norm_stats.p_high,
            },
            "window_size": self.window_size,
            "sampling_rate_hz": self.sampling_rate_hz,
            "config_fingerprint": self.config_fingerprint,
            "params": {
                name: {"shape": list(getattr(self, name).shape), "data": getattr(self, name).ravel().tolist()}
                for name in PARAM_NAMES
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LstmModel":
        if d.get("format") != "slipcal-lstm":
            raise ValueError("not a slipcal LSTM model")
        if d.get("version") != 1:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        params = {
            name: np.asarray(d["params"][name]["data"], dtype=float).reshape(d["params"][name]["shape"])
            for name in PARAM_NAMES
        }
        ns = d.get("norm_stats")
        return cls(
            **params,
            norm_stats=None if ns is None else NormalizationStats(ns["p_low"], ns["p_high"]),
            window_size=d.get("window_size"),
            sampling_rate_hz=d.get("sampling_rate_hz"),
            config_fingerprint=d.get("config_fingerprint", ""),
        )


def _param_shapes(n: int, m: int, k: int) -> dict:
    shapes = {}
    for g in GATES:
        shapes[f"W_{g}"] = (n, m)
        shapes[f"R_{g}"] = (n, n)
        shapes[f"b_{g}"] = (n,)
    shapes["W_y"] = (k, n)
    shapes["b_y"] = (k,)
    return shapes


@dataclass
class LstmState:
    c: np.ndarray
    y: np.ndarray

    @classmethod
    def zeros(cls, hidden_size: int) -> "LstmState":
        return cls(np.zeros(hidden_size), np.zeros(hidden_size))


class StepTrace(NamedTuple):
    x: np.ndarray
    z: np.ndarray
    i: np.ndarray
    f: np.ndarray
    c: np.ndarray
    o: np.ndarray
    y: np.ndarray
    y_p: np.ndarray


def forward_step(model: LstmModel, state: LstmState, x) -> tuple[LstmState, np.ndarray, StepTrace]:
    """Advance one timestep for a single sequence."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (model.input_size,) or state.c.shape != (model.hidden_size,):
        raise DimensionMismatch("input or state dimensions do not match the model")
    y_prev = state.y
    z = np.tanh(model.W_z @ x + model.R_z @ y_prev + model.b_z)
    i = sigmoid(model.W_i @ x + model.R_i @ y_prev + model.b_i)
    f = sigmoid(model.W_f @ x + model.R_f @ y_prev + model.b_f)
    c = z * i + state.c * f
    o = sigmoid(model.W_o @ x + model.R_o @ y_prev + model.b_o)
    y = np.tanh(c) * o
    y_p = sigmoid(model.W_y @ y + model.b_y)
    return LstmState(c, y), y_p, StepTrace(x, z, i, f, c, o, y, y_p)


def forward_sequence(model: LstmModel, sequence) -> tuple[np.ndarray, list[StepTrace]]:
    """Run one already-normalized sequence from a zero state; returns final y_p and traces."""
    seq = np.asarray(sequence, dtype=float)
    if seq.ndim == 1:
        seq = seq[:, None]
    state = LstmState.zeros(model.hidden_size)
    traces = []
    y_p = sigmoid(model.b_y)
    for x in seq:
        state, y_p, tr = forward_step(model, state, x)
        traces.append(tr)
    return y_p, traces


class _Cache(NamedTuple):
    x: np.ndarray  # (B, T, M)
    z: np.ndarray  # (B, T, N)
    ifo: np.ndarray  # (B, T, 3N)
    c: np.ndarray  # (B, T + 1, N), c[:, 0] is the zero initial state
    tc: np.ndarray  # (B, T, N)
    y: np.ndarray  # (B, T + 1, N), y[:, 0] is the zero initial state
    y_p: np.ndarray  # (B, K)


def _as_batch(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :, None]
    elif x.ndim == 2:
        x = x[:, :, None]
    return x


def _blas(a, b):
    return a @ b


def _rowwise(a, b):
    # einsum's own loops sum each output entry in the same order whatever the
    # batch size or row position, unlike BLAS kernels
    return np.einsum("...j,jk->...k", a, b)


def _forward_batch(model: LstmModel, x: np.ndarray, stacked=None, exact: bool = False) -> _Cache:
    """Unrolled forward pass; ``exact`` makes each row independent of its batch, bit for bit."""
    w, r, b = stacked if stacked is not None else model.stacked()
    mm = _rowwise if exact else _blas
    bsz, steps, _ = x.shape
    n = model.hidden_size
    a_in = mm(x, w.T) + b
    rt = r.T
    z = np.empty((bsz, steps, n))
    ifo = np.empty((bsz, steps, 3 * n))
    c = np.zeros((bsz, steps + 1, n))
    tc = np.empty((bsz, steps, n))
    y = np.zeros((bsz, steps + 1, n))
    for t in range(steps):
        a = a_in[:, t] + mm(y[:, t], rt)
        zt = np.tanh(a[:, :n])
        st = 0.5 * np.tanh(0.5 * a[:, n:]) + 0.5
        ct = zt * st[:, :n] + c[:, t] * st[:, n : 2 * n]
        tct = np.tanh(ct)
        z[:, t] = zt
        ifo[:, t] = st
        c[:, t + 1] = ct
        tc[:, t] = tct
        y[:, t + 1] = tct * st[:, 2 * n :]
    y_p = sigmoid(mm(y[:, steps], model.W_y.T) + model.b_y)
    return _Cache(x, z, ifo, c, tc, y, y_p)


def _backward_batch(model: LstmModel, cache: _Cache, d_logits: np.ndarray, r: np.ndarray) -> dict:
    """Gradients given dLoss/d(output pre-activation) of shape (B, K)."""
    x, z, ifo, c, tc, y, _ = cache
    bsz, steps, m = x.shape
    n = model.hidden_size
    d_a = np.empty((bsz, steps, 4 * n))
    dy = d_logits @ model.W_y
    dc = np.zeros((bsz, n))
    for t in range(steps - 1, -1, -1):
        i = ifo[:, t, :n]
        f = ifo[:, t, n : 2 * n]
        o = ifo[:, t, 2 * n :]
        tct = tc[:, t]
        zt = z[:, t]
        dc = dc + dy * o * (1.0 - tct * tct)
        da = d_a[:, t]
        da[:, :n] = dc * i * (1.0 - zt * zt)
        da[:, n : 2 * n] = dc * zt * i * (1.0 - i)
        da[:, 2 * n : 3 * n] = dc * c[:, t] * f * (1.0 - f)
        da[:, 3 * n :] = dy * tct * o * (1.0 - o)
        dc = dc * f
        dy = da @ r
    flat_da = d_a.reshape(-1, 4 * n)
    gw = flat_da.T @ x.reshape(-1, m)
    gr = flat_da.T @ y[:, :steps].reshape(-1, n)
    gb = flat_da.sum(axis=0)
    grads = {
        "W_y": d_logits.T @ y[:, steps],
        "b_y": d_logits.sum(axis=0),
    }
    for k, g in enumerate(GATES):
        sl = slice(k * n, (k + 1) * n)
        grads[f"W_{g}"] = gw[sl]
        grads[f"R_{g}"] = gr[sl]
        grads[f"b_{g}"] = gb[sl]
    return grads


def _prepare(model: LstmModel, samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if model.norm_stats is not None:
        x = normalize(x, model.norm_stats)
    return _as_batch(x)


def predict_proba(model: LstmModel, samples, batch_size: int = 4096) -> np.ndarray:
    """Final-timestep outputs (n, K) for raw windows of shape (n, W) or a single window.

    State is reset per window and every window's output is bitwise the same
    whether it is scored alone, in a batch, or in any order.
    """
    x = _prepare(model, samples)
    stacked = model.stacked()
    out = np.empty((x.shape[0], model.output_size))
    for start in range(0, x.shape[0], batch_size):
        out[start : start + batch_size] = _forward_batch(model, x[start : start + batch_size], stacked, exact=True).y_p
    return out


def predict_window(model: LstmModel, window) -> tuple[Label, np.ndarray]:
    """Classify one window; an exact tie between outputs is called non-slip."""
    samples = getattr(window, "samples", window)
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 1:
        raise ValueError("window must hold at least one sample")
    p = predict_proba(model, samples[None])[0]
    return (Label.SLIP if p[1] > p[0] else Label.NONSLIP), p


def _one_hot(labels, k: int = 2) -> np.ndarray:
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    t = np.zeros((labels.size, k))
    t[np.arange(labels.size), labels] = 1.0
    return t


def loss(y_p, label) -> float:
    """Cross-entropy summed over the independent logistic outputs against a one-hot target."""
    p = np.clip(np.asarray(y_p, dtype=float), LOSS_EPS, 1.0 - LOSS_EPS)
    t = _one_hot([int(label)], p.shape[-1])[0]
    return float(-np.sum(t * np.log(p) + (1.0 - t) * np.log1p(-p)))


def _batch_loss(y_p: np.ndarray, targets: np.ndarray) -> np.ndarray:
    p = np.clip(y_p, LOSS_EPS, 1.0 - LOSS_EPS)
    return -np.sum(targets * np.log(p) + (1.0 - targets) * np.log1p(-p), axis=1)


def batch_loss_and_gradients(model: LstmModel, x: np.ndarray, labels, stacked=None):
    """Mean loss over a batch of normalized inputs (B, T[, M]) and its gradients.

    Returns (mean loss, per-window outputs, gradient dict).
    """
    x = _as_batch(x)
    stacked = stacked if stacked is not None else model.stacked()
    cache = _forward_batch(model, x, stacked)
    targets = _one_hot(labels, model.output_size)
    per = _batch_loss(cache.y_p, targets)
    d_logits = (cache.y_p - targets) / x.shape[0]
    grads = _backward_batch(model, cache, d_logits, stacked[1])
    return float(per.mean()), cache.y_p, grads


def bptt_gradients(model: LstmModel, window, label) -> dict:
    """Exact loss gradients for one window, keyed like ``LstmModel.params()``.

    The window is normalized with ``model.norm_stats`` when the model has them.
    """
    samples = getattr(window, "samples", window)
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[0] < 1:
        raise ValueError("window must hold at least one sample")
    if model.norm_stats is not None:
        samples = normalize(samples, model.norm_stats)
    _, _, grads = batch_loss_and_gradients(model, samples[None], [int(label)])
    return grads


@dataclass(frozen=True)
class TrainConfig:
    hidden_size: int = 20
    momentum: float = 0.125
    lr_schedule: tuple = (0.01, 0.001, 0.0001, 0.00001)
    max_epochs_per_stage: int = 100
    patience_epochs: int = 10
    progress_epsilon: float = 1e-4
    batch_size: int = 32
    init_scale: float = 0.5
    seed: int = 0
    forget_bias: float = 0.0
    clip_norm: float | None = 32.0
    gradient_reduction: str = "sum"

    def __post_init__(self):
        if self.gradient_reduction not in ("sum", "mean"):
            raise ValueError("gradient_reduction must be 'sum' or 'mean'")
        object.__setattr__(self, "lr_schedule", tuple(float(v) for v in self.lr_schedule))
        if self.hidden_size < 1 or self.batch_size < 1 or self.max_epochs_per_stage < 1 or self.patience_epochs < 1:
            raise ValueError("hidden size, batch size, epoch cap and patience must be positive")
        if not (self.momentum >= 0 and self.init_scale > 0 and self.progress_epsilon >= 0):
            raise ValueError("momentum, init scale and progress epsilon must be non-negative")
        lrs = self.lr_schedule
        if any(v <= 0 for v in lrs) or any(b >= a for a, b in zip(lrs, lrs[1:])):
            raise ValueError("learning-rate schedule must be positive and strictly decreasing")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


class EpochRecord(NamedTuple):
    stage: int
    learning_rate: float
    epoch: int
    loss: float
    accuracy: float


def train(train_set, config: TrainConfig = TrainConfig()) -> tuple[LstmModel, list[EpochRecord]]:
    """Fit a fresh model on a windowed dataset.

    With ``gradient_reduction="sum"`` (default) the per-window gradients of a
    mini-batch are added, so a learning rate means the same thing as in
    per-window SGD; ``"mean"`` averages them instead.

    Each learning-rate stage runs momentum SGD (``v <- mu*v - lr*grad``,
    ``w <- w + v``) on shuffled mini-batches until the epoch cap or until the
    epoch loss fails to improve on the stage's best by more than
    ``progress_epsilon`` (relative) for ``patience_epochs`` epochs in a row.

    Weights start uniform in ``[-init_scale, init_scale]``. When ``clip_norm``
    is set, a reduced batch gradient whose global L2 norm exceeds it is
    rescaled to that norm; without this, rare bursts of large gradients on
    long windows can throw a trained model back to chance.
    """
    samples = np.asarray(train_set.samples, dtype=float)
    labels = np.asarray(train_set.labels, dtype=np.int64)
    n = samples.shape[0]
    if n == 0:
        raise EmptyDataset("training set is empty")

    rng = np.random.default_rng(config.seed)
    model = LstmModel.initialize(
        config.hidden_size, 1, 2, config.init_scale, rng, config.forget_bias
    )
    model.norm_stats = fit_normalization(samples)
    model.window_size = int(train_set.window_size)
    model.sampling_rate_hz = float(train_set.sampling_rate_hz)
    model.config_fingerprint = config.fingerprint()
    history: list[EpochRecord] = []
    if not config.lr_schedule:
        return model, history

    x = normalize(samples, model.norm_stats)[:, :, None]
    params = model.params()
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    bs = config.batch_size
    for stage, lr in enumerate(config.lr_schedule):
        best = np.inf
        stale = 0
        for epoch in range(config.max_epochs_per_stage):
            order = rng.permutation(n)
            loss_sum = 0.0
            correct = 0
            for start in range(0, n, bs):
                idx = order[start : start + bs]
                stacked = model.stacked()
                mean_loss, y_p, grads = batch_loss_and_gradients(model, x[idx], labels[idx], stacked)
                loss_sum += mean_loss * idx.size
                if config.gradient_reduction == "sum":
                    grads = {k: g * idx.size for k, g in grads.items()}
                correct += int(np.count_nonzero((y_p[:, 1] > y_p[:, 0]) == (labels[idx] == 1)))
                if config.clip_norm is not None:
                    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
                    if norm > config.clip_norm:
                        grads = {k: g * (config.clip_norm / norm) for k, g in grads.items()}
                for k in params:
                    velocity[k] *= config.momentum
                    velocity[k] -= lr * grads[k]
                    params[k] += velocity[k]
            epoch_loss = loss_sum / n
            history.append(EpochRecord(stage, lr, epoch, epoch_loss, correct / n))
            log.debug("stage %d lr %g epoch %d loss %.6f acc %.4f", stage, lr, epoch, epoch_loss, correct / n)
            if not np.isfinite(epoch_loss):
                raise FloatingPointError(f"training diverged at stage {stage}, epoch {epoch}")
            if epoch_loss < best and (best == np.inf or (best - epoch_loss) > config.progress_epsilon * best):
                best = epoch_loss
                stale = 0
            else:
                best = min(best, epoch_loss)
                stale += 1
                if stale >= config.patience_epochs:
                    break
    return model, history
