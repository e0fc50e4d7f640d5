"""LSTM equalizer: gated cell, deep stack with inter-layer dropout, sigmoid
decoder, FIR post-filter and the streaming forward pass.

Gate parameters are stored stacked along a leading axis of length four, in
the order forget, input, cell candidate, output (``GATES``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import causal_fir
from .errors import ConfigError, ShapeError
from .signal import BitStream, DelayLine, LinkConfig, Waveform, sample_and_hold

GATES = ("f", "i", "cs", "o")
F, I, CS, O = range(4)


def sigmoid(x):
    # tanh form: no overflow for large |x|.
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


@dataclass
class GateParams:
    """Weights of one LSTM layer.

    ``w`` has shape ``(4, hidden, input)``, ``wr`` ``(4, hidden, hidden)``
    and ``b`` ``(4, hidden)``.
    """

    w: np.ndarray
    wr: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        self.wr = np.asarray(self.wr, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.w.ndim != 3 or self.w.shape[0] != 4:
            raise ShapeError(f"w must have shape (4, hidden, input), got {self.w.shape}")
        hidden = self.w.shape[1]
        if self.wr.shape != (4, hidden, hidden):
            raise ShapeError(f"wr must have shape (4, {hidden}, {hidden}), got {self.wr.shape}")
        if self.b.shape != (4, hidden):
            raise ShapeError(f"b must have shape (4, {hidden}), got {self.b.shape}")

    @classmethod
    def zeros(cls, input_width: int, hidden: int) -> GateParams:
        return cls(
            np.zeros((4, hidden, input_width)),
            np.zeros((4, hidden, hidden)),
            np.zeros((4, hidden)),
        )

    @property
    def hidden(self) -> int:
        return self.w.shape[1]

    @property
    def input_width(self) -> int:
        return self.w.shape[2]

    def gate(self, name: str):
        k = GATES.index(name)
        return self.w[k], self.wr[k], self.b[k]

    def copy(self) -> GateParams:
        return GateParams(self.w.copy(), self.wr.copy(), self.b.copy())


@dataclass
class CellState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden: int) -> CellState:
        return cls(np.zeros(hidden), np.zeros(hidden))


@dataclass
class DropoutMask:
    """Keep flags for each layer boundary plus the inverted-dropout scale."""

    keep_flags: tuple
    scale: float = 1.0


def default_post_fir(cfg: LinkConfig) -> np.ndarray:
    """Moving average spanning half a bit at the equalizer clock."""
    ticks_per_bit = max(1, cfg.samples_per_bit // cfg.tick_period)
    n = max(1, ticks_per_bit // 2)
    return np.full(n, 1.0 / n)


@dataclass
class LstmStack:
    """Trainable equalizer model.

    ``latency`` is the decision delay, in equalizer ticks, the model was
    trained for; :func:`equalize_stream` uses it to place bit decisions.
    """

    layers: list
    fc_w: np.ndarray
    fc_b: float = 0.0
    dropout_rate: float = 0.0
    post_fir: np.ndarray = field(default_factory=lambda: np.ones(1))
    latency: int = 0

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("an LSTM stack needs at least one layer")
        for lower, upper in zip(self.layers, self.layers[1:]):
            if upper.input_width != lower.hidden:
                raise ShapeError(
                    f"layer input width {upper.input_width} != previous hidden {lower.hidden}"
                )
        self.fc_w = np.asarray(self.fc_w, dtype=float).reshape(-1)
        if self.fc_w.size != self.layers[-1].hidden:
            raise ShapeError("fc_w length must equal the last layer's hidden width")
        self.fc_b = float(self.fc_b)
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        self.post_fir = np.asarray(self.post_fir, dtype=float).reshape(-1)
        if self.post_fir.size < 1:
            raise ConfigError("post_fir needs at least one tap")

    @property
    def input_width(self) -> int:
        return self.layers[0].input_width

    @property
    def hidden_sizes(self) -> list[int]:
        return [p.hidden for p in self.layers]

    def zero_states(self) -> list[CellState]:
        return [CellState.zeros(p.hidden) for p in self.layers]

    def copy(self) -> LstmStack:
        return LstmStack(
            [p.copy() for p in self.layers],
            self.fc_w.copy(),
            self.fc_b,
            self.dropout_rate,
            self.post_fir.copy(),
            self.latency,
        )

    # Flat parameter vector, used by the optimizer. post_fir and latency are
    # fixed hyper-parameters and not part of it.
    def pack(self) -> np.ndarray:
        parts = []
        for p in self.layers:
            parts += [p.w.ravel(), p.wr.ravel(), p.b.ravel()]
        parts += [self.fc_w, [self.fc_b]]
        return np.concatenate(parts)

    def unpack(self, flat: np.ndarray) -> LstmStack:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.n_params:
            raise ShapeError(f"expected {self.n_params} parameters, got {flat.size}")
        pos = 0

        def take(shape):
            nonlocal pos
            n = int(np.prod(shape))
            out = flat[pos:pos + n].reshape(shape).copy()
            pos += n
            return out

        layers = [GateParams(take(p.w.shape), take(p.wr.shape), take(p.b.shape)) for p in self.layers]
        fc_w = take(self.fc_w.shape)
        fc_b = float(take((1,))[0])
        return LstmStack(layers, fc_w, fc_b, self.dropout_rate, self.post_fir.copy(), self.latency)

    @property
    def n_params(self) -> int:
        n = sum(p.w.size + p.wr.size + p.b.size for p in self.layers)
        return n + self.fc_w.size + 1


def cell_step(p: GateParams, x: np.ndarray, state: CellState) -> CellState:
    """Advance one LSTM cell by one clock and return the new state."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.input_width,):
        raise ShapeError(f"cell input must have shape ({p.input_width},), got {x.shape}")
    if state.h.shape != (p.hidden,) or state.c.shape != (p.hidden,):
        raise ShapeError("cell state does not match the layer's hidden width")
    z = p.w @ x + p.wr @ state.h + p.b
    f = sigmoid(z[F])
    i = sigmoid(z[I])
    cs = np.tanh(z[CS])
    o = sigmoid(z[O])
    c = f * state.c + i * cs
    return CellState(o * np.tanh(c), c)


def make_dropout_mask(rate: float, width, seed) -> DropoutMask:
    """Draw keep flags, each zero with probability ``rate``.

    ``width`` is one integer or a sequence of widths, one per layer
    boundary. Surviving channels are scaled by ``1 / (1 - rate)``.
    """
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
    widths = [int(width)] if np.isscalar(width) else [int(w) for w in width]
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if rate == 0.0:
        flags = tuple(np.ones(w, dtype=np.uint8) for w in widths)
    else:
        flags = tuple((rng.random(w) >= rate).astype(np.uint8) for w in widths)
    return DropoutMask(flags, 1.0 / (1.0 - rate))


def stack_forward(
    m: LstmStack,
    x: np.ndarray,
    states: Sequence[CellState],
    mode: str = "infer",
    mask: DropoutMask | None = None,
) -> tuple[float, list[CellState]]:
    """One clock through every layer and the decoder.

    In ``"train"`` mode the h-output of each non-final layer is multiplied by
    its keep flags and the mask scale before feeding the next layer; in
    ``"infer"`` mode nothing is masked.
    """
    if len(states) != len(m.layers):
        raise ShapeError(f"expected {len(m.layers)} cell states, got {len(states)}")
    if mode not in ("train", "infer"):
        raise ConfigError(f"mode must be 'train' or 'infer', got {mode!r}")
    if mode == "train" and len(m.layers) > 1:
        if mask is None:
            raise ConfigError("train mode needs a dropout mask")
        if len(mask.keep_flags) != len(m.layers) - 1:
            raise ShapeError("dropout mask needs one flag vector per layer boundary")
    new_states = []
    inp = x
    for k, (p, st) in enumerate(zip(m.layers, states)):
        st = cell_step(p, inp, st)
        new_states.append(st)
        inp = st.h
        if mode == "train" and k < len(m.layers) - 1:
            inp = inp * mask.keep_flags[k] * mask.scale
    y = float(sigmoid(m.fc_w @ inp + m.fc_b))
    return y, new_states


def fir_postfilter(y: Waveform, taps) -> Waveform:
    """Causal FIR with zero history; same semantics as the channel model."""
    taps = np.asarray(taps, dtype=float).reshape(-1)
    if taps.size < 1:
        raise ConfigError("FIR post-filter needs at least one tap")
    return Waveform(causal_fir(y.samples, taps), y.sample_period)


def slice_bits(values: np.ndarray, threshold: float) -> np.ndarray:
    """Hard decision: 1 where the value is at or above the threshold."""
    return (np.asarray(values) >= threshold).astype(np.uint8)


def decision_ticks(n_ticks: int, cfg: LinkConfig, phase: int = 0, delay: int = 0) -> np.ndarray:
    """Equalizer-clock index of each bit centre, shifted by ``delay`` ticks.

    Only bits whose decision tick lies inside ``[0, n_ticks)`` are returned.
    """
    spb, period = cfg.samples_per_bit, cfg.tick_period
    n_bits = (phase + n_ticks * period) // spb + 1
    k = np.arange(n_bits)
    ticks = (k * spb + spb // 2 - phase) // period + delay
    return ticks[(ticks >= 0) & (ticks < n_ticks)]


def equalize_stream(
    m: LstmStack, rx: Waveform, cfg: LinkConfig, phase: int = 0
) -> tuple[Waveform, BitStream]:
    """Run the equalizer clock by clock over ``rx``.

    ``rx`` is sampled every ``cfg.tick_period`` samples from ``phase``;
    each tick is pushed into a zero-filled delay line of depth ``n``, the
    stack advances once with persistent state, the decoder output is
    post-filtered, and bits are sliced at bit centres delayed by the
    model's latency and the post-filter's group delay.
    """
    if cfg.delay_depth != m.input_width:
        raise ShapeError(
            f"delay depth {cfg.delay_depth} does not match model input width {m.input_width}"
        )
    ticks = sample_and_hold(rx, phase, cfg.tick_period)
    line = DelayLine(cfg.delay_depth)
    states = m.zero_states()
    y = np.empty(len(ticks))
    for t, sample in enumerate(ticks.samples):
        y[t], states = stack_forward(m, line.push(sample), states)
    analog = fir_postfilter(Waveform(y, ticks.sample_period), m.post_fir)
    delay = m.latency + (m.post_fir.size - 1) // 2
    at = decision_ticks(len(analog), cfg, phase, delay)
    if at.size == 0:
        # Too short for a single decision; fall back to the last output.
        at = np.array([len(analog) - 1])
    return analog, BitStream(slice_bits(analog.samples[at], cfg.threshold))
