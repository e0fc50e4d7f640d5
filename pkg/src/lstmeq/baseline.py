"""Classical FFE + DFE receiver used as the comparison baseline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ImpulseResponse, apply_channel, causal_fir
from .errors import ConfigError, FitError
from .signal import BitStream, LinkConfig, Waveform, modulate_nrz


@dataclass
class FfeTaps:
    """Cursor taps; ``precursors[0]`` is the earliest (farthest) precursor."""

    precursors: np.ndarray
    main: float
    postcursors: np.ndarray
    residual: float | None = None

    def __post_init__(self):
        self.precursors = np.asarray(self.precursors, dtype=float).reshape(-1)
        self.postcursors = np.asarray(self.postcursors, dtype=float).reshape(-1)
        self.main = float(self.main)
        if self.main == 0.0:
            raise ConfigError("the FFE main cursor must be non-zero")
        if not (np.all(np.isfinite(self.precursors)) and np.all(np.isfinite(self.postcursors))
                and np.isfinite(self.main)):
            raise ConfigError("FFE taps must be finite")

    @property
    def taps(self) -> np.ndarray:
        return np.concatenate([self.precursors, [self.main], self.postcursors])

    @property
    def n_pre(self) -> int:
        return self.precursors.size


@dataclass
class DfeTaps:
    """Feedback taps, one per trailing decided bit, and slicer threshold."""

    taps: np.ndarray
    threshold: float = 0.5

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=float).reshape(-1)
        if not np.all(np.isfinite(self.taps)) or not np.isfinite(self.threshold):
            raise ConfigError("DFE taps must be finite")
        self.threshold = float(self.threshold)


def _spread(taps: np.ndarray, spacing: int) -> np.ndarray:
    out = np.zeros((taps.size - 1) * spacing + 1)
    out[::spacing] = taps
    return out


def ffe_apply(t: FfeTaps, rx: Waveform, samples_per_cursor: int) -> Waveform:
    """Cursor-spaced FIR.

    Precursor taps need future samples, so the filter is realised causally
    and its output lags the input by ``n_pre * samples_per_cursor`` samples.
    """
    if samples_per_cursor < 1:
        raise ConfigError("samples_per_cursor must be >= 1")
    return Waveform(causal_fir(rx.samples, _spread(t.taps, samples_per_cursor)), rx.sample_period)


def dfe_equalize(t: DfeTaps, y: Waveform, cfg: LinkConfig) -> tuple[BitStream, Waveform]:
    """Decision feedback over one sample per bit.

    ``corrected[k] = y[k] - sum_j taps[j] * d[k-1-j]`` with ``d`` the
    previously decided bits (0/1); ``d[k]`` slices ``corrected[k]`` at
    ``t.threshold``. The taps therefore carry the ``high - low`` swing.
    """
    yv = y.samples
    n = yv.size
    taps = t.taps
    corrected = np.empty(n)
    d = np.zeros(n, dtype=np.uint8)
    for k in range(n):
        fb = 0.0
        for j in range(min(taps.size, k)):
            if d[k - 1 - j]:
                fb += taps[j]
        corrected[k] = yv[k] - fb
        d[k] = corrected[k] >= t.threshold
    return BitStream(d), Waveform(corrected, y.sample_period)


def fit_ffe_taps(pulse: ImpulseResponse, n_pre: int, n_post: int, samples_per_cursor: int) -> FfeTaps:
    """Least-squares zero-forcing FFE.

    The main cursor is the pulse peak. Taps minimise the squared distance
    between the equalized pulse, read at every cursor position it can
    reach, and a unit pulse at the main cursor. The residual is stored on
    the returned taps.
    """
    if n_pre < 0 or n_post < 0:
        raise ConfigError("cursor counts must be >= 0")
    spc = int(samples_per_cursor)
    if spc < 1:
        raise ConfigError("samples_per_cursor must be >= 1")
    p = pulse.taps
    c = int(np.argmax(np.abs(p)))
    # Cursor samples of the pulse relative to the main cursor.
    lo = -(c // spc)
    hi = (p.size - 1 - c) // spc
    cursors = {k: p[c + k * spc] for k in range(lo, hi + 1)}
    offsets = np.arange(-n_pre, n_post + 1)
    # Rows: every output cursor any tap can touch, for a model-independent residual.
    rows = np.arange(lo - n_pre, hi + n_post + 1)
    A = np.array([[cursors.get(r - i, 0.0) for i in offsets] for r in rows])
    target = (rows == 0).astype(float)
    if np.linalg.matrix_rank(A) < offsets.size:
        raise FitError("FFE least-squares system is singular")
    sol, *_ = np.linalg.lstsq(A, target, rcond=None)
    residual = float(np.sum((A @ sol - target) ** 2))
    # sol[j] is the tap for cursor offset j - n_pre, i.e. causal position j.
    taps = sol
    return FfeTaps(taps[:n_pre], taps[n_pre], taps[n_pre + 1:], residual)


def _cursor_spacing(pulse: ImpulseResponse, cfg: LinkConfig) -> int:
    spacing = cfg.bit_period / pulse.tap_period
    if abs(spacing - round(spacing)) > 1e-6 * spacing or round(spacing) < 1:
        raise FitError("pulse tap period must divide the bit period")
    return int(round(spacing))


def fit_dfe_taps(equalized_pulse: ImpulseResponse, n_taps: int, cfg: LinkConfig,
                 cursor: int | None = None) -> DfeTaps:
    """Read the post-cursor tail off the equalized pulse.

    Tap ``j`` is the pulse ``j+1`` bit intervals after the main cursor
    (``cursor``, default the pulse peak), times the signal swing; the
    threshold sits half a swing above the pulse train's all-low level.
    """
    p = equalized_pulse.taps
    spacing = _cursor_spacing(equalized_pulse, cfg)
    c = int(np.argmax(np.abs(p))) if cursor is None else int(cursor)
    need = c + n_taps * spacing
    if need >= p.size:
        raise FitError(
            f"pulse of {p.size} taps does not cover {n_taps} bit intervals after its peak"
        )
    swing = cfg.high_level - cfg.low_level
    taps = swing * p[c + spacing * np.arange(1, n_taps + 1)]
    cursors = p[c % spacing::spacing]
    threshold = cfg.low_level * float(np.sum(cursors)) + 0.5 * swing * p[c]
    return DfeTaps(taps, threshold)


def pulse_response(h: ImpulseResponse, cfg: LinkConfig, length_bits: int | None = None) -> ImpulseResponse:
    """Channel response to one isolated high bit, above the all-low baseline.

    Sample 0 is the start of the isolated bit's interval.
    """
    spb = cfg.samples_per_bit
    if length_bits is None:
        length_bits = int(np.ceil(len(h) / spb)) + 4
    bits = np.zeros(length_bits + 1, dtype=np.uint8)
    bits[1] = 1
    one = apply_channel(modulate_nrz(BitStream(bits), cfg), h).samples
    zero = apply_channel(modulate_nrz(BitStream(np.zeros_like(bits)), cfg), h).samples
    return ImpulseResponse((one - zero)[spb:], cfg.sample_period)


@dataclass
class Baseline:
    """Fitted FFE-DFE receiver plus the sample index of bit 0's decision."""

    ffe: FfeTaps
    dfe: DfeTaps
    decision_offset: int
    info: dict = field(default_factory=dict)


def fit_baseline(h: ImpulseResponse, cfg: LinkConfig, n_pre: int = 2, n_post: int = 4,
                 n_dfe: int = 6) -> Baseline:
    spb = cfg.samples_per_bit
    pulse = pulse_response(h, cfg, length_bits=int(np.ceil(len(h) / spb)) + n_pre + n_post + n_dfe + 4)
    ffe = fit_ffe_taps(pulse, n_pre, n_post, spb)
    eq = ffe_apply(ffe, Waveform(pulse.taps, pulse.tap_period), spb)
    # The FFE delays the main cursor by its precursor span.
    offset = int(np.argmax(np.abs(pulse.taps))) + n_pre * spb
    dfe = fit_dfe_taps(ImpulseResponse(eq.samples, pulse.tap_period), n_dfe, cfg, cursor=offset)
    return Baseline(ffe, dfe, offset, {"ffe_residual": ffe.residual})


def retime_baseline(b: Baseline, h: ImpulseResponse, cfg: LinkConfig) -> Baseline:
    """Keep ``b``'s tap values but lock the decision phase to a new link rate."""
    spb = cfg.samples_per_bit
    pulse = pulse_response(h, cfg)
    offset = int(np.argmax(np.abs(pulse.taps))) + b.ffe.n_pre * spb
    return Baseline(b.ffe, b.dfe, offset, dict(b.info))


def run_baseline(b: Baseline, rx: Waveform, cfg: LinkConfig) -> tuple[BitStream, Waveform]:
    """Equalize ``rx``; returns the decided bits and a full-rate waveform.

    Bit ``k`` is decided at sample ``decision_offset + k * samples_per_bit``
    of the FFE output. The returned waveform is the FFE output with each
    bit's DFE feedback held over that bit's interval, for eye diagrams.
    """
    spb = cfg.samples_per_bit
    y = ffe_apply(b.ffe, rx, spb)
    at = np.arange(b.decision_offset, len(y), spb)
    bits, corrected = dfe_equalize(b.dfe, Waveform(y.samples[at], cfg.bit_period), cfg)
    feedback = y.samples[at] - corrected.samples
    held = y.samples.copy()
    start = b.decision_offset - spb // 2
    for k, fb in enumerate(feedback):
        lo, hi = max(0, start + k * spb), max(0, start + (k + 1) * spb)
        held[lo:hi] -= fb
    return bits, Waveform(held, y.sample_period)
