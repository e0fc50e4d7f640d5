import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lstmeq.errors import ConfigError, DataError
from lstmeq.signal import (
    BitStream,
    DelayLine,
    LinkConfig,
    Waveform,
    delay_matrix,
    delay_push,
    generate_bits,
    modulate_nrz,
    read_bits_csv,
    read_waveform_csv,
    sample_and_hold,
    write_bits_csv,
    write_waveform_csv,
)


def lfsr_register(order, tap, n):
    """Shift-register Fibonacci LFSR, written independently of the library."""
    reg = [1] * order
    out = []
    for _ in range(n):
        out.append(reg[-1])
        fb = reg[order - 1] ^ reg[tap - 1]
        reg = [fb] + reg[:-1]
    return np.array(out, dtype=np.uint8)


def is_rotation(a, b):
    return any(np.array_equal(np.roll(b, k), a) for k in range(b.size))


# ---------------------------------------------------------------- bits

def test_bernoulli_degenerate_probabilities():
    assert generate_bits(7, 4, "bernoulli", p=1.0).bits.tolist() == [1, 1, 1, 1]
    assert generate_bits(7, 4, "bernoulli", p=0.0).bits.tolist() == [0, 0, 0, 0]


@pytest.mark.parametrize("seed", [0, 1, 5, 99, 12345])
def test_prbs7_period_balance(seed):
    b = generate_bits(seed, 127, "prbs7").bits
    assert int(b.sum()) == 64
    assert b.size - int(b.sum()) == 63


def test_prbs7_matches_register_lfsr():
    ref = lfsr_register(7, 6, 127)
    assert int(ref.sum()) == 64
    for seed in (0, 3, 77):
        assert is_rotation(generate_bits(seed, 127, "prbs7").bits, ref)


def test_prbs15_period_and_recurrence():
    b = generate_bits(4, 2**15 - 1, "prbs15").bits
    assert int(b.sum()) == 2**14
    n = np.arange(15, b.size)
    assert np.array_equal(b[n], b[n - 15] ^ b[n - 14])


def test_prbs_repeats_with_its_period():
    b = generate_bits(2, 3 * 127, "prbs7").bits
    assert np.array_equal(b[:127], b[127:254])


@pytest.mark.parametrize("kwargs", [dict(count=0), dict(count=5, p=1.5), dict(count=5, p=-0.1),
                                    dict(count=5, kind="prbs9")])
def test_generate_bits_rejects_bad_arguments(kwargs):
    with pytest.raises(ConfigError):
        generate_bits(1, **kwargs)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31), count=st.integers(1, 300),
       kind=st.sampled_from(["bernoulli", "prbs7", "prbs15"]))
def test_generate_bits_is_pure(seed, count, kind):
    a, b = generate_bits(seed, count, kind), generate_bits(seed, count, kind)
    assert a == b
    assert len(a) == count
    assert set(np.unique(a.bits)) <= {0, 1}


def test_bitstream_validation():
    with pytest.raises(DataError):
        BitStream([])
    with pytest.raises(DataError):
        BitStream([0, 2, 1])


# ---------------------------------------------------------------- modulation

def test_nrz_single_bit_no_edges():
    cfg = LinkConfig(samples_per_bit=4, rise_samples=0, fall_samples=0)
    assert modulate_nrz(BitStream([1]), cfg).samples.tolist() == [1, 1, 1, 1]


def test_nrz_ramp_is_centred_on_boundary():
    cfg = LinkConfig(samples_per_bit=4, rise_samples=2, fall_samples=2)
    w = modulate_nrz(BitStream([0, 1]), cfg).samples
    assert w.tolist() == [0, 0, 0, 0, 0.5, 1, 1, 1]


def test_nrz_constant_bits_stay_constant():
    cfg = LinkConfig()
    w = modulate_nrz(BitStream([1, 1]), cfg).samples
    assert np.all(w == cfg.high_level)


def test_nrz_sample_period():
    cfg = LinkConfig()
    w = modulate_nrz(BitStream([0, 1, 0]), cfg)
    assert w.sample_period == pytest.approx(1 / (50e9 * 8))


link_configs = st.builds(
    lambda spb, r, f, lo, swing: LinkConfig(
        bit_rate=1e9, samples_per_bit=spb, rise_samples=min(r, spb // 2),
        fall_samples=min(f, spb // 2 - 1 if spb % 2 == 0 else spb // 2),
        low_level=lo, high_level=lo + swing, delay_resolution=1.0 / (1e9 * spb),
    ),
    spb=st.integers(2, 12), r=st.integers(0, 6), f=st.integers(0, 6),
    lo=st.floats(-1, 1), swing=st.floats(0.1, 2),
)
bit_lists = st.lists(st.integers(0, 1), min_size=1, max_size=60)


@settings(max_examples=100, deadline=None)
@given(cfg=link_configs, bits=bit_lists)
def test_nrz_length_law(cfg, bits):
    assert len(modulate_nrz(BitStream(bits), cfg)) == len(bits) * cfg.samples_per_bit


@settings(max_examples=100, deadline=None)
@given(cfg=link_configs, bits=bit_lists)
def test_mid_bit_sampling_recovers_levels(cfg, bits):
    if cfg.rise_samples + cfg.fall_samples >= cfg.samples_per_bit:
        return
    w = modulate_nrz(BitStream(bits), cfg)
    mid = sample_and_hold(w, cfg.samples_per_bit // 2, cfg.samples_per_bit).samples
    assert np.array_equal(mid, cfg.levels(np.array(bits)))
    assert np.array_equal((mid >= cfg.threshold).astype(int), bits)


@pytest.mark.parametrize("kwargs", [
    dict(samples_per_bit=1), dict(rise_samples=5, fall_samples=4), dict(high_level=0.0),
    dict(delay_depth=0), dict(delay_resolution=3e-12),
])
def test_link_config_validation(kwargs):
    with pytest.raises(ConfigError):
        LinkConfig(**kwargs)


def test_default_link_ticks():
    cfg = LinkConfig()
    assert cfg.tick_period == 2
    assert cfg.threshold == 0.5


# ---------------------------------------------------------------- sampling

def test_sample_and_hold_examples():
    w = Waveform([1, 2, 3, 4, 5, 6], 1.0)
    assert sample_and_hold(w, 0, 2).samples.tolist() == [1, 3, 5]
    assert sample_and_hold(w, 1, 3).samples.tolist() == [2, 5]
    assert sample_and_hold(w, 0, 1).samples.tolist() == w.samples.tolist()
    assert sample_and_hold(w, 1, 3).sample_period == 3.0


@pytest.mark.parametrize("phase,period", [(2, 2), (-1, 2), (0, 0), (0, 7)])
def test_sample_and_hold_rejects_bad_phase(phase, period):
    with pytest.raises(ConfigError):
        sample_and_hold(Waveform([1, 2, 3, 4, 5, 6], 1.0), phase, period)


def test_waveform_validation():
    with pytest.raises(ConfigError):
        Waveform([1.0], 0.0)
    with pytest.raises(DataError):
        Waveform([1.0, np.nan], 1.0)


# ---------------------------------------------------------------- delay line

def test_delay_push_examples():
    d = DelayLine(3)
    assert delay_push(d, 1).tolist() == [1, 0, 0]
    delay_push(d, 2)
    assert delay_push(d, 3).tolist() == [3, 2, 1]
    for v in (4, 5):
        out = delay_push(d, v)
    assert out.tolist() == [5, 4, 3]


@settings(max_examples=100, deadline=None)
@given(depth=st.integers(1, 10), values=st.lists(st.floats(-10, 10), min_size=1, max_size=40))
def test_delay_line_matches_list_model(depth, values):
    d = DelayLine(depth)
    history = []
    rows = []
    for v in values:
        history.insert(0, v)
        expect = (history + [0.0] * depth)[:depth]
        out = d.push(v)
        assert out.tolist() == expect
        rows.append(out)
    assert np.array_equal(delay_matrix(np.array(values), depth), np.array(rows))


# ---------------------------------------------------------------- CSV

def test_waveform_csv_round_trip(tmp_path):
    w = Waveform(np.random.default_rng(0).normal(size=50), 2.5e-12)
    write_waveform_csv(tmp_path / "w.csv", w)
    first = (tmp_path / "w.csv").read_text().splitlines()[0]
    assert first.startswith("# sample_period=")
    r = read_waveform_csv(tmp_path / "w.csv")
    assert r.sample_period == pytest.approx(w.sample_period, rel=1e-12)
    np.testing.assert_allclose(r.samples, w.samples, rtol=1e-12)


def test_bits_csv_round_trip(tmp_path):
    b = generate_bits(3, 77)
    write_bits_csv(tmp_path / "b.csv", b, 2e-11)
    assert read_bits_csv(tmp_path / "b.csv") == b
