"""Touchstone v1 two-port (``.s2p``) reader and writer."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError

_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_FORMATS = ("ma", "ri", "db")


@dataclass(frozen=True)
class SParameterSet:
    frequencies: np.ndarray
    s21: np.ndarray
    s11: np.ndarray
    reference_impedance: float = 50.0
    s12: np.ndarray | None = None
    s22: np.ndarray | None = None

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        s21 = np.asarray(self.s21, dtype=complex)
        s11 = np.asarray(self.s11, dtype=complex)
        if not (f.size == s21.size == s11.size):
            raise ValueError("frequencies, s21 and s11 must have equal length")
        if f.size and np.any(np.diff(f) <= 0):
            raise ValueError("frequencies must be strictly ascending")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "s21", s21)
        object.__setattr__(self, "s11", s11)
        # Reciprocal, symmetric two-port unless told otherwise.
        s12 = s21 if self.s12 is None else np.asarray(self.s12, dtype=complex)
        s22 = s11 if self.s22 is None else np.asarray(self.s22, dtype=complex)
        object.__setattr__(self, "s12", s12)
        object.__setattr__(self, "s22", s22)

    def insertion_loss_db(self) -> np.ndarray:
        return 20.0 * np.log10(np.abs(self.s21))

    def return_loss_db(self) -> np.ndarray:
        return 20.0 * np.log10(np.abs(self.s11))


def _to_complex(a, b, fmt):
    if fmt == "ri":
        return complex(a, b)
    mag = 10.0 ** (a / 20.0) if fmt == "db" else a
    ang = np.deg2rad(b)
    return complex(mag * np.cos(ang), mag * np.sin(ang))


def _parse_option_line(line, lineno, source):
    unit, fmt, z0 = "ghz", "ma", 50.0
    tokens = line[1:].split()
    i = 0
    while i < len(tokens):
        tok = tokens[i].lower()
        if tok in _UNITS:
            unit = tok
        elif tok in _FORMATS:
            fmt = tok
        elif tok == "s":
            pass
        elif tok in ("y", "z", "h", "g"):
            raise ParseError(f"only S parameters are supported, got {tokens[i]!r}", lineno, source)
        elif tok == "r":
            if i + 1 >= len(tokens):
                raise ParseError("option 'R' needs an impedance value", lineno, source)
            try:
                z0 = float(tokens[i + 1])
            except ValueError:
                raise ParseError(f"bad reference impedance {tokens[i + 1]!r}", lineno, source) from None
            i += 1
        else:
            raise ParseError(f"unrecognised option {tokens[i]!r}", lineno, source)
        i += 1
    return _UNITS[unit], fmt, z0


def parse_touchstone(text: str, source=None) -> SParameterSet:
    """Parse Touchstone v1 2-port text (``MA``/``RI``/``DB``; Hz..GHz).

    Raises :class:`ParseError` carrying the line number on malformed option
    lines, non-numeric tokens or non-ascending frequencies.
    """
    scale, fmt, z0 = 1e9, "ma", 50.0
    seen_option = False
    pending: list[float] = []
    pending_line = None
    rows = []
    last_f = None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if not seen_option:
                scale, fmt, z0 = _parse_option_line(line, lineno, source)
                seen_option = True
            continue
        if line.startswith("["):
            raise ParseError("Touchstone v2 keywords are not supported", lineno, source)
        for tok in line.split():
            try:
                value = float(tok)
            except ValueError:
                raise ParseError(f"non-numeric token {tok!r}", lineno, source) from None
            if not pending:
                pending_line = lineno
            pending.append(value)
            if len(pending) == 9:
                freq = pending[0] * scale
                if last_f is not None and freq <= last_f:
                    raise ParseError(
                        f"frequency {freq:g} Hz does not ascend (previous {last_f:g} Hz)",
                        pending_line, source,
                    )
                last_f = freq
                s = [_to_complex(pending[k], pending[k + 1], fmt) for k in (1, 3, 5, 7)]
                rows.append((freq, *s))
                pending = []

    if pending:
        raise ParseError(f"incomplete data record ({len(pending)} of 9 values)", pending_line, source)
    if not rows:
        raise ParseError("no data records found", None, source)
    data = np.array(rows)
    return SParameterSet(
        frequencies=data[:, 0].real,
        s11=data[:, 1],
        s21=data[:, 2],
        s12=data[:, 3],
        s22=data[:, 4],
        reference_impedance=z0,
    )


def read_touchstone(path) -> SParameterSet:
    path = Path(path)
    return parse_touchstone(path.read_text(), source=str(path))


def format_touchstone(sp: SParameterSet, fmt: str = "ma", unit: str = "ghz") -> str:
    """Render ``sp`` as Touchstone v1 text in the requested data format."""
    fmt, unit = fmt.lower(), unit.lower()
    scale = _UNITS[unit]
    lines = [f"# {unit.upper()} S {fmt.upper()} R {sp.reference_impedance:g}"]
    for k, f in enumerate(sp.frequencies):
        vals = [repr(float(f / scale))]
        for s in (sp.s11[k], sp.s21[k], sp.s12[k], sp.s22[k]):
            if fmt == "ri":
                a, b = s.real, s.imag
            else:
                mag = abs(s)
                a = 20.0 * np.log10(mag) if fmt == "db" else mag
                b = np.rad2deg(np.angle(s))
            vals += [repr(float(a)), repr(float(b))]
        lines.append(" ".join(vals))
    return "\n".join(lines) + "\n"
