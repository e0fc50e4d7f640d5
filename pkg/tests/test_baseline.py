from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lstmeq.baseline import (
    Baseline,
    DfeTaps,
    FfeTaps,
    dfe_equalize,
    ffe_apply,
    fit_baseline,
    fit_dfe_taps,
    fit_ffe_taps,
    pulse_response,
    run_baseline,
)
from lstmeq.channel import ImpulseResponse, add_awgn, apply_channel, lossy_channel_per_ui
from lstmeq.errors import ConfigError, FitError
from lstmeq.experiment import load_config, resolve_baseline
from lstmeq.metrics import ber
from lstmeq.signal import BitStream, LinkConfig, Waveform, generate_bits, modulate_nrz

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
PUBLISHED_FFE = [-2.337340, 0.782150, 4.038660, -2.185680, 0.534350, -0.121820]
PUBLISHED_DFE = [0.322812, -0.017401, 0.048581, -0.065590, 0.039204, -0.021085]


# ---------------------------------------------------------------- FFE

def test_identity_ffe_passes_input():
    x = Waveform(np.random.default_rng(0).normal(size=50), 1.0)
    y = ffe_apply(FfeTaps([], 1.0, []), x, 8)
    assert np.array_equal(y.samples, x.samples)


def test_ffe_impulse_shows_cursor_spaced_taps():
    t = FfeTaps([0.1], 1.0, [-0.2, 0.05])
    x = np.zeros(12)
    x[0] = 1.0
    y = ffe_apply(t, Waveform(x, 1.0), 3).samples
    assert y[[0, 3, 6, 9]].tolist() == [0.1, 1.0, -0.2, 0.05]
    assert np.all(np.delete(y, [0, 3, 6, 9]) == 0)


def test_published_taps_reproduced_at_cursor_positions():
    t = FfeTaps(PUBLISHED_FFE[:2], PUBLISHED_FFE[2], PUBLISHED_FFE[3:])
    x = np.zeros(64)
    x[0] = 1.0
    y = ffe_apply(t, Waveform(x, 1.0), 8).samples
    np.testing.assert_array_equal(y[0:48:8], PUBLISHED_FFE)


def test_ffe_validation():
    with pytest.raises(ConfigError):
        FfeTaps([], 0.0, [])
    with pytest.raises(ConfigError):
        FfeTaps([np.nan], 1.0, [])
    with pytest.raises(ConfigError):
        ffe_apply(FfeTaps([], 1.0, []), Waveform([1.0], 1.0), 0)


# ---------------------------------------------------------------- DFE

def _isi(bits, post):
    """One sample per bit: the bit itself plus trailing ISI."""
    b = np.asarray(bits, dtype=float)
    y = b.copy()
    for j, a in enumerate(post, 1):
        y[j:] += a * b[:-j]
    return y


def test_dfe_corrects_every_ten_bit_pattern():
    post = [0.3, 0.1]
    cfg = LinkConfig()
    dfe = DfeTaps(post, 0.5)
    for n in range(2**10):
        bits = np.array([(n >> k) & 1 for k in range(10)], dtype=np.uint8)
        decided, corrected = dfe_equalize(dfe, Waveform(_isi(bits, post), 1.0), cfg)
        assert np.array_equal(decided.bits, bits)
        np.testing.assert_allclose(corrected.samples, bits, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    bits=st.lists(st.integers(0, 1), min_size=1, max_size=64),
    post=st.lists(st.floats(-0.8, 0.8), min_size=0, max_size=6),
)
def test_dfe_cancels_known_postcursors(bits, post):
    bits = np.array(bits, dtype=np.uint8)
    decided, _ = dfe_equalize(DfeTaps(post, 0.5), Waveform(_isi(bits, post), 1.0), LinkConfig())
    assert np.array_equal(decided.bits, bits)


def test_uncorrected_isi_makes_errors():
    bits = np.array([1, 0, 1, 0, 1, 0], dtype=np.uint8)
    decided, _ = dfe_equalize(DfeTaps([], 0.5), Waveform(_isi(bits, [0.7]), 1.0), LinkConfig())
    assert not np.array_equal(decided.bits, bits)


# ---------------------------------------------------------------- fitting

def _bit_rate_pulse(values, cfg):
    return ImpulseResponse(values, cfg.bit_period)


def test_dfe_fit_reads_the_tail():
    cfg = LinkConfig()
    d = fit_dfe_taps(_bit_rate_pulse([1.0, 0.3, 0.1, 0.0], cfg), 2, cfg)
    np.testing.assert_allclose(d.taps, [0.3, 0.1], rtol=1e-15)
    assert d.threshold == 0.5


def test_dfe_fit_needs_enough_tail():
    cfg = LinkConfig()
    with pytest.raises(FitError):
        fit_dfe_taps(_bit_rate_pulse([1.0, 0.3], cfg), 3, cfg)


def test_ffe_fit_of_clean_pulse_is_unity():
    t = fit_ffe_taps(ImpulseResponse([0.0, 2.0, 0.0, 0.0], 1.0), 1, 1, 1)
    np.testing.assert_allclose(t.taps, [0.0, 0.5, 0.0], atol=1e-12)
    assert t.residual == pytest.approx(0.0, abs=1e-20)


def test_ffe_fit_flattens_a_precursor():
    p = ImpulseResponse([0.25, 1.0, 0.4, 0.1], 1.0)
    t = fit_ffe_taps(p, 2, 4, 1)
    eq = np.convolve(p.taps, t.taps)
    main = 1 + t.n_pre
    assert eq[main] == pytest.approx(1.0, abs=0.02)
    assert np.max(np.abs(np.delete(eq, main))) < 0.05


@settings(max_examples=100, deadline=None)
@given(
    pulse=st.lists(st.floats(-0.5, 0.5), min_size=1, max_size=6),
    n_pre=st.integers(0, 2),
    n_post=st.integers(0, 4),
)
def test_more_taps_never_raise_the_residual(pulse, n_pre, n_post):
    p = ImpulseResponse([1.0] + pulse, 1.0)
    small = fit_ffe_taps(p, n_pre, n_post, 1)
    for bigger in (fit_ffe_taps(p, n_pre + 1, n_post, 1), fit_ffe_taps(p, n_pre, n_post + 1, 1)):
        assert bigger.residual <= small.residual + 1e-9


def test_pulse_response_of_identity_channel_is_one_bit():
    cfg = LinkConfig(rise_samples=0, fall_samples=0)
    p = pulse_response(ImpulseResponse([1.0], cfg.sample_period), cfg, length_bits=3)
    assert p.taps[:8].tolist() == [1.0] * 8
    assert np.all(p.taps[8:] == 0)


def test_fitted_baseline_opens_a_lossy_link():
    cfg = LinkConfig()
    h = lossy_channel_per_ui(0.6, 0, 0.0, 8, cfg.sample_period)
    b = fit_baseline(h, cfg)
    assert b.ffe.residual < 0.05
    tx = generate_bits(3, 3000)
    rx = add_awgn(apply_channel(modulate_nrz(tx, cfg), h), 0.02, 4)
    bits, held = run_baseline(b, rx, cfg)
    rate, lag = ber(tx, bits, max_lag=4)
    assert rate == 0.0 and lag == 0
    assert len(held) == len(rx)


def test_run_baseline_decision_grid():
    cfg = LinkConfig()
    b = Baseline(FfeTaps([], 1.0, []), DfeTaps([], 0.5), 4)
    tx = BitStream([1, 0, 0, 1, 1, 0])
    bits, _ = run_baseline(b, modulate_nrz(tx, cfg), cfg)
    assert bits == tx


# ---------------------------------------------------------------- config

def test_config_file_echoes_published_taps():
    cfg = load_config(CONFIGS / "table_taps.yaml")
    h = lossy_channel_per_ui(0.6, 0, 0.0, 8, cfg.link.sample_period)
    b = resolve_baseline(cfg, h)
    assert b.dfe.taps.tolist() == PUBLISHED_DFE
    assert b.ffe.taps.tolist() == PUBLISHED_FFE
    assert b.dfe.threshold == 0.5


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-0.99, 0.99))
def test_single_postcursor_dfe_is_exhaustively_error_free(a):
    cfg = LinkConfig()
    dfe = DfeTaps([a], 0.5)
    for n in range(2**10):
        bits = np.array([(n >> k) & 1 for k in range(10)], dtype=np.uint8)
        decided, _ = dfe_equalize(dfe, Waveform(_isi(bits, [a]), 1.0), cfg)
        assert np.array_equal(decided.bits, bits)


@settings(max_examples=100, deadline=None)
@given(
    x=st.lists(st.floats(-10, 10), min_size=1, max_size=40),
    pre=st.lists(st.floats(-2, 2), max_size=2),
    post=st.lists(st.floats(-2, 2), max_size=4),
    main=st.floats(0.1, 4),
    a=st.floats(-3, 3),
    b=st.floats(-3, 3),
    spc=st.integers(1, 4),
)
def test_ffe_is_linear(x, pre, post, main, a, b, spc):
    t = FfeTaps(pre, main, post)
    x = np.array(x)
    y = np.cos(np.arange(x.size))
    lhs = ffe_apply(t, Waveform(a * x + b * y, 1.0), spc).samples
    rhs = a * ffe_apply(t, Waveform(x, 1.0), spc).samples + b * ffe_apply(t, Waveform(y, 1.0), spc).samples
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-9 * max(1.0, np.max(np.abs(rhs))))


def test_baseline_pipeline_is_pure():
    cfg = LinkConfig()
    h = lossy_channel_per_ui(0.6, 0, 0.0, 8, cfg.sample_period)
    b = fit_baseline(h, cfg)
    assert fit_baseline(h, cfg).ffe.taps.tolist() == b.ffe.taps.tolist()
    tx = generate_bits(5, 300)
    rx = add_awgn(apply_channel(modulate_nrz(tx, cfg), h), 0.02, 6)
    before = rx.samples.copy()
    taps_before = b.ffe.taps.copy(), b.dfe.taps.copy()
    first, second = run_baseline(b, rx, cfg), run_baseline(b, rx, cfg)
    assert first[0] == second[0]
    assert np.array_equal(first[1].samples, second[1].samples)
    assert np.array_equal(rx.samples, before)
    assert np.array_equal(b.ffe.taps, taps_before[0]) and np.array_equal(b.dfe.taps, taps_before[1])
