"""Channel models: FIR convolution, AWGN, the synthetic lossy channel and
S21-to-impulse conversion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .signal import Waveform, _read_column, _write_column
from .touchstone import SParameterSet

_PERIOD_RTOL = 1e-9


@dataclass(frozen=True)
class ImpulseResponse:
    """Discrete channel impulse response sampled every ``tap_period`` seconds."""

    taps: np.ndarray
    tap_period: float

    def __post_init__(self):
        taps = np.array(self.taps, dtype=float).reshape(-1)
        if taps.size < 1:
            raise DataError("impulse response needs at least one tap")
        if not np.all(np.isfinite(taps)):
            raise DataError("impulse response taps must be finite")
        if not np.sum(taps**2) > 0:
            raise DataError("impulse response has zero energy")
        if not self.tap_period > 0:
            raise ConfigError("tap_period must be positive")
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "tap_period", float(self.tap_period))

    def __len__(self):
        return int(self.taps.size)


def causal_fir(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """``y[k] = sum_j taps[j] * x[k - j]`` with zero history, ``len(y) == len(x)``."""
    x = np.asarray(x, dtype=float)
    taps = np.asarray(taps, dtype=float)
    if taps.size == 1:
        return x * taps[0]
    return np.convolve(x, taps)[: x.size]


def apply_channel(w: Waveform, h: ImpulseResponse) -> Waveform:
    """Convolve ``w`` with ``h``; the output keeps the input length."""
    if abs(h.tap_period - w.sample_period) > _PERIOD_RTOL * w.sample_period:
        raise ConfigError(
            f"impulse tap period {h.tap_period:g} s does not match waveform "
            f"sample period {w.sample_period:g} s; resample the impulse first"
        )
    if h.taps.size == 1 and h.taps[0] == 1.0:
        return w
    return Waveform(causal_fir(w.samples, h.taps), w.sample_period)


def add_awgn(w: Waveform, sigma: float, seed: int) -> Waveform:
    """Add i.i.d. N(0, sigma^2) noise drawn from ``seed``."""
    if not sigma >= 0:
        raise ConfigError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return w
    rng = np.random.default_rng(seed)
    return Waveform(w.samples + rng.normal(0.0, sigma, len(w)), w.sample_period)


def synth_lossy_channel(
    decay: float,
    echo_delay_taps: int,
    echo_gain: float,
    length: int,
    tap_period: float,
) -> ImpulseResponse:
    """Exponential-loss channel with one reflection.

    ``taps[j] = (1 - decay) * decay**j`` plus, for ``j >= echo_delay_taps``,
    ``echo_gain * (1 - decay) * decay**(j - echo_delay_taps)``.
    """
    if not 0 < decay < 1:
        raise ConfigError(f"decay must lie in (0, 1), got {decay}")
    if not abs(echo_gain) < 1:
        raise ConfigError(f"|echo_gain| must be < 1, got {echo_gain}")
    if length < 1:
        raise ConfigError("channel length must be >= 1")
    if echo_delay_taps < 0:
        raise ConfigError("echo_delay_taps must be >= 0")
    j = np.arange(length)
    taps = (1.0 - decay) * decay**j
    if echo_gain != 0:
        k = j[echo_delay_taps:] - echo_delay_taps
        taps[echo_delay_taps:] += echo_gain * (1.0 - decay) * decay**k
    return ImpulseResponse(taps, tap_period)


def lossy_channel_per_ui(
    decay_per_ui: float,
    echo_delay_ui: float,
    echo_gain: float,
    samples_per_bit: int,
    sample_period: float,
    length_ui: float = 12.0,
) -> ImpulseResponse:
    """The synthetic channel specified per unit interval, sampled per sample.

    ``decay_per_ui`` is the amplitude decay over one bit; the per-sample
    decay is its ``samples_per_bit``-th root, so the response at bit spacing
    is the same whatever the oversampling.
    """
    if not 0 < decay_per_ui < 1:
        raise ConfigError(f"decay_per_ui must lie in (0, 1), got {decay_per_ui}")
    decay = decay_per_ui ** (1.0 / samples_per_bit)
    return synth_lossy_channel(
        decay,
        int(round(echo_delay_ui * samples_per_bit)),
        echo_gain,
        max(1, int(round(length_ui * samples_per_bit))),
        sample_period,
    )


def interpolate_s21(sp: SParameterSet, n_fft: int) -> tuple[np.ndarray, np.ndarray]:
    """Resample S21 onto the uniform one-sided grid ``0 .. f_max``.

    Returns ``(freqs, spectrum)`` with ``n_fft // 2 + 1`` points. Below the
    lowest measured frequency the magnitude is held and the phase set to
    zero at DC; the Nyquist bin is made real so the spectrum is exactly the
    one-sided half of a Hermitian spectrum.
    """
    if n_fft < 2 or n_fft & (n_fft - 1):
        raise ConfigError(f"n_fft must be a power of two, got {n_fft}")
    if n_fft < 2 * len(sp.frequencies):
        raise ConfigError(
            f"n_fft={n_fft} is too small for {len(sp.frequencies)} frequency points"
        )
    f = np.asarray(sp.frequencies, dtype=float)
    s = np.asarray(sp.s21, dtype=complex)
    if f[0] > 0:
        f = np.concatenate([[0.0], f])
        s = np.concatenate([[abs(s[0]) + 0j], s])
    grid = np.linspace(0.0, f[-1], n_fft // 2 + 1)
    spec = np.interp(grid, f, s.real) + 1j * np.interp(grid, f, s.imag)
    spec[0] = spec[0].real
    spec[-1] = spec[-1].real
    return grid, spec


def s21_to_impulse(
    sp: SParameterSet,
    n_fft: int,
    window: str = "none",
    energy: float = 0.999,
) -> ImpulseResponse:
    """Inverse-DFT the insertion loss into a real impulse response.

    The impulse is sampled at ``1 / (2 f_max)`` and truncated at the first
    tap where cumulative energy reaches ``energy`` (``1.0`` keeps all
    ``n_fft`` taps).
    """
    if len(sp.frequencies) < 2:
        raise ConfigError("need at least two frequency points")
    _, spec = interpolate_s21(sp, n_fft)
    if window == "hann":
        k = np.arange(spec.size)
        spec = spec * 0.5 * (1.0 + np.cos(np.pi * k / (spec.size - 1)))
    elif window != "none":
        raise ConfigError(f"unknown window {window!r}")
    taps = np.fft.irfft(spec, n=n_fft)
    if energy < 1.0:
        cum = np.cumsum(taps**2)
        stop = int(np.searchsorted(cum, energy * cum[-1])) + 1
        taps = taps[:stop]
    return ImpulseResponse(taps, 1.0 / (2.0 * sp.frequencies[-1]))


def write_impulse_csv(path, h: ImpulseResponse):
    _write_column(path, h.taps, h.tap_period, lambda v: repr(float(v)))


def read_impulse_csv(path) -> ImpulseResponse:
    taps, period = _read_column(path)
    return ImpulseResponse(taps, period)


def resample_impulse(h: ImpulseResponse, tap_period: float) -> ImpulseResponse:
    """Linearly re-sample ``h`` onto a new tap period, preserving DC gain.

    Taps are treated as samples of a continuous response times the old
    period, so they are rescaled by the period ratio after interpolation.
    """
    if not tap_period > 0:
        raise ConfigError("tap_period must be positive")
    if abs(tap_period - h.tap_period) <= _PERIOD_RTOL * h.tap_period:
        return h
    t_old = np.arange(len(h)) * h.tap_period
    n_new = max(1, int(np.floor(t_old[-1] / tap_period)) + 1)
    t_new = np.arange(n_new) * tap_period
    taps = np.interp(t_new, t_old, h.taps) * (tap_period / h.tap_period)
    if not np.sum(taps**2) > 0:
        raise DataError("impulse response vanishes after resampling")
    return ImpulseResponse(taps, tap_period)
