"""Dataset construction, loss, BPTT gradients, Adam and the training loop."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, ShapeError, TrainingError
from .lstm import CS, F, I, O, GateParams, LstmStack, default_post_fir, sigmoid
from .signal import BitStream, LinkConfig, Waveform, delay_matrix, sample_and_hold

log = logging.getLogger(__name__)


# ---------------------------------------------------------------- dataset

@dataclass
class Dataset:
    """Training windows over a tick-rate delay-line matrix.

    ``inputs`` holds one delay-line vector per equalizer tick (shape
    ``(T, n)``). Window ``j`` is the sequence of ``seq_len`` consecutive
    vectors starting at ``starts[j]``; its target is ``targets[j]``.
    """

    inputs: np.ndarray
    starts: np.ndarray
    targets: np.ndarray
    seq_len: int

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.starts = np.asarray(self.starts, dtype=np.int64)
        self.targets = np.asarray(self.targets, dtype=float)
        if self.starts.shape != self.targets.shape:
            raise ShapeError("starts and targets must have equal length")
        if self.starts.size and self.starts.max() + self.seq_len > len(self.inputs):
            raise ShapeError("a window runs past the end of the inputs")

    def __len__(self):
        return int(self.starts.size)

    @property
    def width(self) -> int:
        return self.inputs.shape[1]

    def window(self, j: int) -> np.ndarray:
        s = self.starts[j]
        return self.inputs[s:s + self.seq_len]

    def batch(self, idx) -> tuple[np.ndarray, np.ndarray]:
        idx = np.asarray(idx)
        rows = self.starts[idx][:, None] + np.arange(self.seq_len)[None, :]
        return self.inputs[rows], self.targets[idx]

    def subset(self, idx) -> Dataset:
        return Dataset(self.inputs, self.starts[np.asarray(idx)], self.targets[np.asarray(idx)], self.seq_len)

    @staticmethod
    def concat(parts) -> Dataset:
        parts = list(parts)
        if len({p.seq_len for p in parts}) != 1 or len({p.width for p in parts}) != 1:
            raise ShapeError("datasets to concatenate must share seq_len and width")
        offsets = np.cumsum([0] + [len(p.inputs) for p in parts[:-1]])
        return Dataset(
            np.concatenate([p.inputs for p in parts]),
            np.concatenate([p.starts + off for p, off in zip(parts, offsets)]),
            np.concatenate([p.targets for p in parts]),
            parts[0].seq_len,
        )


def tick_bits(n_ticks: int, cfg: LinkConfig, phase: int = 0) -> np.ndarray:
    """Index of the bit interval each equalizer tick falls in."""
    return (phase + np.arange(n_ticks) * cfg.tick_period) // cfg.samples_per_bit


def build_dataset(
    tx: BitStream,
    rx: Waveform,
    cfg: LinkConfig,
    latency_offset: int,
    phase: int = 0,
    seq_len: int | None = None,
) -> Dataset:
    """Pair delay-line windows of ``rx`` with transmitted levels.

    ``rx`` is either the full-rate waveform (sampled here every
    ``cfg.tick_period`` samples from ``phase``) or already one sample per
    tick. Window ``j`` covers ticks ``j .. j+L-1`` (``L = seq_len``,
    default ``cfg.delay_depth``) and targets the level of the bit containing
    tick ``j + L - 1 - latency_offset``. Windows whose target falls outside
    the transmitted stream are dropped.
    """
    n = cfg.delay_depth
    seq_len = n if seq_len is None else int(seq_len)
    if seq_len < 1:
        raise ConfigError("seq_len must be >= 1")
    tick_dt = cfg.sample_period * cfg.tick_period
    if math.isclose(rx.sample_period, tick_dt, rel_tol=1e-9):
        ticks = rx.samples
    elif math.isclose(rx.sample_period, cfg.sample_period, rel_tol=1e-9):
        ticks = sample_and_hold(rx, phase, cfg.tick_period).samples
    else:
        raise ConfigError(
            f"rx sample period {rx.sample_period:g} s matches neither the sample "
            f"period nor the equalizer tick period of the link"
        )
    T = ticks.size
    if T < seq_len:
        raise DataError(f"{T} ticks are too few for one window of {seq_len}")
    X = delay_matrix(ticks, n)
    starts = np.arange(T - seq_len + 1)
    target_tick = starts + seq_len - 1 - latency_offset
    bit_idx = tick_bits(T, cfg, phase)[np.clip(target_tick, 0, T - 1)]
    keep = (target_tick >= 0) & (bit_idx < len(tx))
    if not np.any(keep):
        raise DataError("no window has a target inside the transmitted bit stream")
    targets = cfg.levels(tx.bits[bit_idx[keep]])
    return Dataset(X, starts[keep], targets, seq_len)


# ---------------------------------------------------------------- loss / init

def mse_loss(pred, target) -> float:
    pred = np.asarray(pred, dtype=float).reshape(-1)
    target = np.asarray(target, dtype=float).reshape(-1)
    if pred.shape != target.shape or pred.size < 1:
        raise ShapeError(f"pred and target lengths differ or are empty: {pred.size} vs {target.size}")
    return float(np.mean((target - pred) ** 2))


def xavier_init(fan_in: int, fan_out: int, seed) -> np.ndarray:
    """``(fan_out, fan_in)`` matrix, uniform on ``±sqrt(6 / (fan_in + fan_out))``."""
    if fan_in < 1 or fan_out < 1:
        raise ConfigError("fan_in and fan_out must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_out, fan_in))


def init_stack(
    input_width: int,
    hidden_sizes,
    seed: int,
    dropout_rate: float = 0.0,
    post_fir=None,
    latency: int = 0,
) -> LstmStack:
    """Xavier-initialised stack with zero biases."""
    rng = np.random.default_rng(seed)
    layers = []
    width = input_width
    for hidden in hidden_sizes:
        w = np.stack([xavier_init(width, hidden, rng) for _ in range(4)])
        wr = np.stack([xavier_init(hidden, hidden, rng) for _ in range(4)])
        layers.append(GateParams(w, wr, np.zeros((4, hidden))))
        width = hidden
    fc_w = xavier_init(width, 1, rng).reshape(-1)
    return LstmStack(
        layers,
        fc_w,
        0.0,
        dropout_rate,
        np.ones(1) if post_fir is None else post_fir,
        latency,
    )


def init_for_link(cfg: LinkConfig, hidden_sizes, seed: int, dropout_rate=0.0, latency=0) -> LstmStack:
    return init_stack(cfg.delay_depth, hidden_sizes, seed, dropout_rate, default_post_fir(cfg), latency)


# ---------------------------------------------------------------- forward / BPTT

@dataclass
class Gradients:
    """Partial derivatives, shape-congruent with an :class:`LstmStack`."""

    layers: list
    fc_w: np.ndarray
    fc_b: float

    def flat(self) -> np.ndarray:
        parts = []
        for g in self.layers:
            parts += [g.w.ravel(), g.wr.ravel(), g.b.ravel()]
        parts += [self.fc_w, [self.fc_b]]
        return np.concatenate(parts)


def _batch_masks(m: LstmStack, batch: int, rng) -> list | None:
    if m.dropout_rate == 0.0 or len(m.layers) == 1 or rng is None:
        return None
    scale = 1.0 / (1.0 - m.dropout_rate)
    return [
        (rng.random((batch, p.hidden)) >= m.dropout_rate) * scale
        for p in m.layers[:-1]
    ]


def forward_batch(m: LstmStack, X: np.ndarray, masks=None, keep_cache: bool = False):
    """Run ``B`` windows of shape ``(T, n)`` from zero state.

    ``masks`` is ``None`` (inference) or one ``(B, hidden)`` array of
    already-scaled keep factors per layer boundary, held for the whole
    window. Returns the decoder output at the last step, shape ``(B,)``,
    and the cache needed by :func:`backward_batch`.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 3 or X.shape[2] != m.input_width:
        raise ShapeError(f"windows must have shape (B, T, {m.input_width}), got {X.shape}")
    B, T, _ = X.shape
    cache = []
    inp = X
    for k, p in enumerate(m.layers):
        H = p.hidden
        # Input projection for all steps at once; shape (B, T, 4, H).
        zx = (inp @ p.w.reshape(4 * H, -1).T).reshape(B, T, 4, H) + p.b
        wr_t = p.wr.reshape(4 * H, H).T
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        hs = np.empty((B, T, H))
        if keep_cache:
            gates = np.empty((B, T, 4, H))
            cs_ = np.empty((B, T, H))
            tc = np.empty((B, T, H))
        for t in range(T):
            z = zx[:, t] + (h @ wr_t).reshape(B, 4, H)
            f = sigmoid(z[:, F])
            i = sigmoid(z[:, I])
            g = np.tanh(z[:, CS])
            o = sigmoid(z[:, O])
            c = f * c + i * g
            th = np.tanh(c)
            h = o * th
            hs[:, t] = h
            if keep_cache:
                gates[:, t, F], gates[:, t, I], gates[:, t, CS], gates[:, t, O] = f, i, g, o
                cs_[:, t] = c
                tc[:, t] = th
        if keep_cache:
            cache.append((inp, hs, gates, cs_, tc))
        inp = hs
        if masks is not None and k < len(m.layers) - 1:
            inp = hs * masks[k][:, None, :]
    last = inp[:, -1]
    y = sigmoid(last @ m.fc_w + m.fc_b)
    return y, (cache, last)


def backward_batch(m: LstmStack, X, targets, masks=None) -> tuple[float, Gradients]:
    """Mean squared error over the batch and its exact gradient (BPTT)."""
    targets = np.asarray(targets, dtype=float).reshape(-1)
    y, (cache, last) = forward_batch(m, X, masks, keep_cache=True)
    if targets.shape != y.shape:
        raise ShapeError("one target per window is required")
    B = y.size
    err = y - targets
    loss = float(np.mean(err**2))
    dpre = (2.0 / B) * err * y * (1.0 - y)
    g_fc_w = last.T @ dpre
    g_fc_b = float(np.sum(dpre))

    T = X.shape[1]
    dh_out = np.zeros((B, T, m.layers[-1].hidden))
    dh_out[:, -1] = dpre[:, None] * m.fc_w[None, :]
    grads = [None] * len(m.layers)
    for k in range(len(m.layers) - 1, -1, -1):
        p = m.layers[k]
        inp, hs, gates, cs_, tc = cache[k]
        H = p.hidden
        dz_all = np.empty((B, T, 4, H))
        wr2 = p.wr.reshape(4 * H, H)
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            f, i, g, o = gates[:, t, F], gates[:, t, I], gates[:, t, CS], gates[:, t, O]
            c_prev = cs_[:, t - 1] if t > 0 else np.zeros((B, H))
            dh = dh_out[:, t] + dh_next
            th = tc[:, t]
            dc = dc_next + dh * o * (1.0 - th * th)
            dz = dz_all[:, t]
            dz[:, O] = dh * th * o * (1.0 - o)
            dz[:, F] = dc * c_prev * f * (1.0 - f)
            dz[:, I] = dc * g * i * (1.0 - i)
            dz[:, CS] = dc * i * (1.0 - g * g)
            dc_next = dc * f
            dh_next = dz.reshape(B, 4 * H) @ wr2
        h_prev = np.concatenate([np.zeros((B, 1, H)), hs[:, :-1]], axis=1)
        dz2 = dz_all.reshape(B * T, 4 * H)
        gw = (dz2.T @ inp.reshape(B * T, -1)).reshape(p.w.shape)
        gwr = (dz2.T @ h_prev.reshape(B * T, H)).reshape(p.wr.shape)
        gb = dz2.sum(axis=0).reshape(p.b.shape)
        grads[k] = GateParams(gw, gwr, gb)
        if k > 0:
            dx = (dz2 @ p.w.reshape(4 * H, -1)).reshape(B, T, -1)
            if masks is not None:
                dx = dx * masks[k - 1][:, None, :]
            dh_out = dx
    return loss, Gradients(grads, g_fc_w, g_fc_b)


def backward(m: LstmStack, window: np.ndarray, target: float, mask=None) -> tuple[float, Gradients]:
    """Squared error of one window (from zero state) and its gradient.

    ``mask`` optionally fixes the dropout keep factors (a list of
    ``(hidden,)`` arrays, already scaled) for a train-mode gradient.
    """
    window = np.asarray(window, dtype=float)
    if window.ndim != 2:
        raise ShapeError("a window is a (T, n) array of delay-line vectors")
    masks = None if mask is None else [np.asarray(mk, dtype=float)[None, :] for mk in mask]
    return backward_batch(m, window[None], np.array([target]), masks)


def predict(m: LstmStack, ds: Dataset, chunk: int = 4096) -> np.ndarray:
    out = np.empty(len(ds))
    for s in range(0, len(ds), chunk):
        idx = np.arange(s, min(s + chunk, len(ds)))
        X, _ = ds.batch(idx)
        out[idx] = forward_batch(m, X)[0]
    return out


def dataset_loss(m: LstmStack, ds: Dataset) -> float:
    return mse_loss(predict(m, ds), ds.targets)


# ---------------------------------------------------------------- optimizer

@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    validation_interval: int = 100
    patience: int = 5
    max_epochs: int = 10
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    convergence_delta: float = 1e-5
    max_steps: int | None = None
    # Dropout masks draw from their own stream when set; else from ``seed``.
    dropout_seed: int | None = None

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("Adam betas must lie in (0, 1)")
        if self.validation_interval < 1:
            raise ConfigError("validation_interval must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be >= 0")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> AdamState:
        return cls(np.zeros(n), np.zeros(n))


def adam_step(params, grads, state: AdamState, step_index: int, cfg: TrainConfig):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``."""
    if step_index < 1:
        raise ConfigError("Adam step_index starts at 1")
    g = np.asarray(grads, dtype=float)
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g * g
    m_hat = m / (1.0 - cfg.beta1**step_index)
    v_hat = v / (1.0 - cfg.beta2**step_index)
    new = np.asarray(params, dtype=float) - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return new, AdamState(m, v)


# ---------------------------------------------------------------- loop

@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    valid_loss: list = field(default_factory=list)  # (step, mean validation loss)
    stop_reason: str = ""
    model: LstmStack | None = None
    best_step: int = 0

    @property
    def best_valid_loss(self) -> float:
        return min((v for _, v in self.valid_loss), default=math.inf)

    def to_csv(self, path):
        valid = dict(self.valid_loss)
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "train_loss", "valid_loss"])
            for step, loss in enumerate(self.train_loss, 1):
                v = valid.get(step)
                w.writerow([step, repr(float(loss)), "" if v is None else repr(float(v))])


def train(m0: LstmStack, train_ds: Dataset, valid_ds: Dataset, cfg: TrainConfig) -> TrainReport:
    """Minibatch Adam with validation-gated early stopping.

    Every ``validation_interval`` steps the mean loss over all validation
    windows is recorded. Training stops once ``patience`` consecutive
    validations fail to improve on the best by more than
    ``convergence_delta``, or when ``max_epochs`` (or ``max_steps``) is
    exhausted. The returned model is the best-validation one.
    """
    if len(train_ds) == 0 or len(valid_ds) == 0:
        raise DataError("training and validation datasets must be non-empty")
    if train_ds.width != m0.input_width or valid_ds.width != m0.input_width:
        raise ShapeError("dataset width does not match the model input width")
    report = TrainReport(model=m0.copy())
    if cfg.max_epochs == 0 or cfg.max_steps == 0:
        report.stop_reason = "no training budget"
        return report

    rng = np.random.default_rng(cfg.seed)
    mask_rng = rng if cfg.dropout_seed is None else np.random.default_rng(cfg.dropout_seed)
    params = m0.pack()
    opt = AdamState.zeros(params.size)
    model = m0
    best, best_params, best_step = math.inf, params.copy(), 0
    stale = 0
    step = 0
    V = cfg.validation_interval

    def validate():
        nonlocal best, best_params, best_step, stale
        vloss = dataset_loss(model, valid_ds)
        report.valid_loss.append((step, vloss))
        if vloss < best - cfg.convergence_delta:
            stale = 0
        else:
            stale += 1
        if vloss < best:
            best, best_params, best_step = vloss, params.copy(), step
        log.debug("step %d: valid %.6g (best %.6g)", step, vloss, best)
        return stale >= cfg.patience

    reason = "max_epochs reached"
    done = False
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(len(train_ds))
        for s in range(0, len(order), cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            X, y = train_ds.batch(idx)
            masks = _batch_masks(model, len(idx), mask_rng)
            loss, grads = backward_batch(model, X, y, masks)
            if not math.isfinite(loss):
                raise TrainingError(f"loss became {loss} at step {step + 1} (epoch {epoch})")
            step += 1
            params, opt = adam_step(params, grads.flat(), opt, step, cfg)
            model = model.unpack(params)
            report.train_loss.append(loss)
            if step % V == 0 and validate():
                reason, done = "validation loss stopped improving", True
                break
            if cfg.max_steps is not None and step >= cfg.max_steps:
                reason, done = "max_steps reached", True
                break
        if done:
            break
    if step % V != 0:
        validate()
    if not math.isfinite(best):
        raise TrainingError("validation loss is not finite")
    report.stop_reason = reason
    report.model = m0.unpack(best_params)
    report.best_step = best_step
    return report
