"""Bit generation, NRZ line coding, sampling and the SIPO delay line."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, ParseError

# Feedback taps (x^a + x^b + 1) of the ITU PRBS polynomials.
PRBS_TAPS = {"prbs7": (7, 6), "prbs15": (15, 14)}


@dataclass(frozen=True)
class BitStream:
    """Ordered logical bits, stored as ``uint8`` zeros and ones."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 1 or bits.size < 1:
            raise DataError("a bit stream needs at least one bit")
        if not np.all((bits == 0) | (bits == 1)):
            raise DataError("bit streams may only contain 0 and 1")
        bits = bits.astype(np.uint8)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __len__(self):
        return int(self.bits.size)

    def __eq__(self, other):
        if not isinstance(other, BitStream):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)


@dataclass(frozen=True)
class Waveform:
    """Uniformly sampled real-valued signal (volts)."""

    samples: np.ndarray
    sample_period: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float).reshape(-1)
        if not self.sample_period > 0:
            raise ConfigError(f"sample_period must be positive, got {self.sample_period}")
        if not np.all(np.isfinite(samples)):
            raise DataError("waveform samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_period", float(self.sample_period))

    def __len__(self):
        return int(self.samples.size)

    def __getitem__(self, idx):
        return self.samples[idx]

    @property
    def duration(self) -> float:
        return len(self) * self.sample_period


@dataclass
class LinkConfig:
    """Physical-layer parameters of the simulated link.

    ``delay_resolution`` is the spacing of the equalizer's delay taps in
    seconds; it must be an integer multiple of the waveform sample period,
    which fixes the equalizer clock (``tick_period`` samples per tick).
    """

    bit_rate: float = 50e9
    samples_per_bit: int = 8
    high_level: float = 1.0
    low_level: float = 0.0
    rise_samples: int = 2
    fall_samples: int = 2
    delay_depth: int = 15
    delay_resolution: float = 5e-12

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.bit_rate > 0:
            raise ConfigError("bit_rate must be positive")
        if int(self.samples_per_bit) != self.samples_per_bit or self.samples_per_bit < 2:
            raise ConfigError("samples_per_bit must be an integer >= 2")
        if self.rise_samples < 0 or self.fall_samples < 0:
            raise ConfigError("rise/fall samples must be non-negative")
        if self.rise_samples + self.fall_samples > self.samples_per_bit:
            raise ConfigError("rise_samples + fall_samples must not exceed samples_per_bit")
        if not self.high_level > self.low_level:
            raise ConfigError("high_level must exceed low_level")
        if self.delay_depth < 1:
            raise ConfigError("delay_depth must be >= 1")
        if not self.delay_resolution > 0:
            raise ConfigError("delay_resolution must be positive")
        ratio = self.delay_resolution / self.sample_period
        if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-6 * max(1.0, ratio):
            raise ConfigError(
                f"delay_resolution ({self.delay_resolution:g} s) must be a whole multiple "
                f"of the sample period ({self.sample_period:g} s)"
            )

    @property
    def bit_period(self) -> float:
        return 1.0 / self.bit_rate

    @property
    def sample_period(self) -> float:
        return 1.0 / (self.bit_rate * self.samples_per_bit)

    @property
    def tick_period(self) -> int:
        """Waveform samples per equalizer clock tick."""
        return int(round(self.delay_resolution / self.sample_period))

    @property
    def threshold(self) -> float:
        return 0.5 * (self.high_level + self.low_level)

    def levels(self, bits: BitStream | np.ndarray) -> np.ndarray:
        b = bits.bits if isinstance(bits, BitStream) else np.asarray(bits)
        return np.where(b.astype(bool), self.high_level, self.low_level)


def _prbs(taps, seed, count):
    a, b = taps
    # Any nonzero register state yields the same maximal-length cycle, shifted.
    state = seed % ((1 << a) - 1) + 1
    out = np.empty(count + a, dtype=np.uint8)
    out[:a] = [(state >> k) & 1 for k in range(a)]
    for n in range(a, count + a):
        out[n] = out[n - a] ^ out[n - b]
    return out[a:]


def generate_bits(seed: int, count: int, kind: str = "bernoulli", p: float = 0.5) -> BitStream:
    """Generate ``count`` bits.

    ``kind`` is ``"bernoulli"`` (i.i.d. ones with probability ``p``),
    ``"prbs7"`` (x^7 + x^6 + 1) or ``"prbs15"`` (x^15 + x^14 + 1).
    The result depends only on ``(seed, count, kind, p)``.
    """
    if int(count) != count or count < 1:
        raise ConfigError(f"count must be a positive integer, got {count}")
    count = int(count)
    if kind == "bernoulli":
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"Bernoulli probability must lie in [0, 1], got {p}")
        rng = np.random.default_rng(seed)
        return BitStream((rng.random(count) < p).astype(np.uint8))
    if kind in PRBS_TAPS:
        return BitStream(_prbs(PRBS_TAPS[kind], int(seed), count))
    raise ConfigError(f"unknown bit source {kind!r}")


def modulate_nrz(bits: BitStream, cfg: LinkConfig) -> Waveform:
    """NRZ-encode ``bits`` with trapezoidal edges.

    Each transition is a linear ramp of ``rise_samples`` (or
    ``fall_samples``) samples centred on the bit boundary, so the ramp
    crosses mid-level exactly at the boundary. Samples outside every ramp
    are exactly ``high_level`` or ``low_level``.
    """
    cfg.validate()
    spb = cfg.samples_per_bit
    levels = cfg.levels(bits)
    out = np.repeat(levels, spb)
    t = np.arange(out.size, dtype=float)
    b = bits.bits
    for k in np.flatnonzero(b[1:] != b[:-1]) + 1:
        width = cfg.rise_samples if b[k] else cfg.fall_samples
        if width == 0:
            continue
        boundary = k * spb
        lo = max(0, boundary - width)
        hi = min(out.size, boundary + width + 1)
        frac = np.clip((t[lo:hi] - boundary) / width + 0.5, 0.0, 1.0)
        ramp = (frac > 0.0) & (frac < 1.0)
        start, stop = levels[k - 1], levels[k]
        seg = out[lo:hi]
        seg[ramp] = start + (stop - start) * frac[ramp]
    return Waveform(out, cfg.sample_period)


def sample_and_hold(w: Waveform, phase_offset: int, period: int) -> Waveform:
    """Return every ``period``-th sample of ``w`` starting at ``phase_offset``."""
    if period < 1 or period > len(w):
        raise ConfigError(f"period must lie in [1, {len(w)}], got {period}")
    if not 0 <= phase_offset < period:
        raise ConfigError(f"phase_offset must lie in [0, {period}), got {phase_offset}")
    return Waveform(w.samples[phase_offset::period], w.sample_period * period)


@dataclass
class DelayLine:
    """Serial-in parallel-out register chain; register 0 is the newest sample."""

    depth: int
    registers: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.depth < 1:
            raise ConfigError("delay line depth must be >= 1")
        self.registers = np.zeros(self.depth)

    def push(self, sample: float) -> np.ndarray:
        self.registers[1:] = self.registers[:-1]
        self.registers[0] = sample
        return self.registers.copy()

    def reset(self):
        self.registers[:] = 0.0


def delay_push(d: DelayLine, sample: float) -> np.ndarray:
    return d.push(sample)


def delay_matrix(samples: np.ndarray, depth: int) -> np.ndarray:
    """Stack of every delay-line state produced by pushing ``samples`` in order.

    Row ``t`` equals what :meth:`DelayLine.push` returns after the ``t``-th
    push, starting from zeroed registers.
    """
    samples = np.asarray(samples, dtype=float)
    padded = np.concatenate([np.zeros(depth - 1), samples])
    idx = np.arange(samples.size)[:, None] + (depth - 1) - np.arange(depth)[None, :]
    return padded[idx]


# -- CSV convention: one value per line after a ``# sample_period=`` header --

def _write_column(path, values, period, fmt):
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# sample_period={period!r}\n")
        for v in values:
            fh.write(fmt(v) + "\n")


def _read_column(path):
    path = Path(path)
    period = None
    values = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "sample_period":
                    try:
                        period = float(val)
                    except ValueError:
                        raise ParseError(f"bad sample_period {val!r}", lineno, path) from None
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ParseError(f"non-numeric value {line!r}", lineno, path) from None
    if period is None:
        raise ParseError("missing '# sample_period=' header", 1, path)
    return np.array(values), period


def write_waveform_csv(path, w: Waveform):
    _write_column(path, w.samples, w.sample_period, lambda v: repr(float(v)))


def read_waveform_csv(path) -> Waveform:
    values, period = _read_column(path)
    return Waveform(values, period)


def write_bits_csv(path, bits: BitStream, bit_period: float = 1.0):
    _write_column(path, bits.bits, bit_period, lambda v: str(int(v)))


def read_bits_csv(path) -> BitStream:
    values, _ = _read_column(path)
    return BitStream(values.astype(np.uint8) if np.all(np.isin(values, (0, 1))) else values)
