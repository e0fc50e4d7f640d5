import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lstmeq.errors import ParseError, UnsupportedVersionError
from lstmeq.rom import format_model, load_model, parse_model, save_model
from lstmeq.training import init_stack


def _model(seed=0, widths=(4, 3), n_in=5):
    m = init_stack(n_in, list(widths), seed, dropout_rate=0.25, post_fir=np.array([0.5, 0.5]), latency=6)
    rng = np.random.default_rng(seed)
    return m.unpack(m.pack() + rng.normal(scale=1e-3, size=m.n_params))


def test_file_round_trip(tmp_path):
    m = _model()
    save_model(m, tmp_path / "m.rom")
    r = load_model(tmp_path / "m.rom")
    assert np.array_equal(r.pack(), m.pack())
    assert r.dropout_rate == 0.25 and r.latency == 6
    assert r.post_fir.tolist() == [0.5, 0.5]
    assert [p.hidden for p in r.layers] == [4, 3]


def test_text_starts_with_version_header():
    assert format_model(_model()).splitlines()[0] == "lstmeq-rom 1"


@settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    widths=st.lists(st.integers(1, 5), min_size=1, max_size=3),
    n_in=st.integers(1, 6),
)
def test_round_trip_is_bit_exact(seed, widths, n_in):
    m = _model(seed, widths, n_in)
    assert np.array_equal(parse_model(format_model(m)).pack(), m.pack())


def test_truncated_file_names_the_line(tmp_path):
    lines = format_model(_model()).splitlines()
    cut = next(k for k, ln in enumerate(lines) if ln.startswith("wr "))
    with pytest.raises(ParseError) as exc:
        parse_model("\n".join(lines[:cut]) + "\n", source="m.rom")
    assert exc.value.line is not None
    assert "unexpected end of file" in str(exc.value)
    assert "m.rom" in str(exc.value)


def test_unknown_version_is_rejected():
    text = format_model(_model()).replace("lstmeq-rom 1", "lstmeq-rom 9", 1)
    with pytest.raises(UnsupportedVersionError):
        parse_model(text)


def test_trailing_content_is_rejected():
    with pytest.raises(ParseError):
        parse_model(format_model(_model()) + "extra 1\n")


def test_bad_number_is_reported():
    text = format_model(_model())
    first_b = next(ln for ln in text.splitlines() if ln.startswith("b "))
    with pytest.raises(ParseError):
        parse_model(text.replace(first_b, first_b.rsplit(" ", 1)[0] + " x", 1))
