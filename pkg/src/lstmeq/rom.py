"""Parameter ROM: a line-oriented text container for trained models.

Layout (one record per line, ``#`` starts a comment)::

    lstmeq-rom <version>
    layers <count>
    input_width <n>
    hidden <h_1> ... <h_L>
    dropout_rate <p>
    latency <ticks>
    layer <k>                      repeated for each layer
    w <gate> <row values>          hidden rows per gate, gates f, i, cs, o
    wr <gate> <row values>         hidden rows per gate
    b <gate> <values>              one row per gate
    fc_w <values>
    fc_b <value>
    post_fir <values>
    end

Every number is written with 17 significant digits, which round-trips
IEEE doubles exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParseError, UnsupportedVersionError
from .lstm import GATES, GateParams, LstmStack

MAGIC = "lstmeq-rom"
VERSION = 1


def _num(v) -> str:
    return f"{float(v):.16e}"


def _row(values) -> str:
    return " ".join(_num(v) for v in np.asarray(values).reshape(-1))


def format_model(m: LstmStack) -> str:
    lines = [
        f"{MAGIC} {VERSION}",
        f"layers {len(m.layers)}",
        f"input_width {m.input_width}",
        "hidden " + " ".join(str(h) for h in m.hidden_sizes),
        f"dropout_rate {_num(m.dropout_rate)}",
        f"latency {m.latency}",
    ]
    for k, p in enumerate(m.layers):
        lines.append(f"layer {k}")
        for key, arr in (("w", p.w), ("wr", p.wr)):
            for g, name in enumerate(GATES):
                lines += [f"{key} {name} {_row(r)}" for r in arr[g]]
        for g, name in enumerate(GATES):
            lines.append(f"b {name} {_row(p.b[g])}")
    lines += [
        f"fc_w {_row(m.fc_w)}",
        f"fc_b {_num(m.fc_b)}",
        f"post_fir {_row(m.post_fir)}",
        "end",
    ]
    return "\n".join(lines) + "\n"


def save_model(m: LstmStack, path) -> Path:
    path = Path(path)
    path.write_text(format_model(m))
    return path


class _Reader:
    def __init__(self, text: str, source):
        self.source = source
        self.records = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].split()
            if line:
                self.records.append((lineno, line))
        self.pos = 0
        self.last_line = self.records[-1][0] if self.records else None

    def error(self, msg, lineno=None):
        return ParseError(msg, lineno, self.source)

    def next(self, key: str):
        if self.pos >= len(self.records):
            raise self.error(f"unexpected end of file, expected {key!r}", self.last_line)
        lineno, tokens = self.records[self.pos]
        if tokens[0] != key:
            raise self.error(f"expected {key!r}, found {tokens[0]!r}", lineno)
        self.pos += 1
        return lineno, tokens[1:]

    def ints(self, key, count=None):
        lineno, tokens = self.next(key)
        try:
            vals = [int(t) for t in tokens]
        except ValueError:
            raise self.error(f"{key}: expected integers", lineno) from None
        if count is not None and len(vals) != count:
            raise self.error(f"{key}: expected {count} values, got {len(vals)}", lineno)
        return vals

    def floats(self, key, count=None, gate=None):
        lineno, tokens = self.next(key)
        if gate is not None:
            if not tokens or tokens[0] != gate:
                raise self.error(f"{key}: expected gate {gate!r}", lineno)
            tokens = tokens[1:]
        try:
            vals = np.array([float(t) for t in tokens])
        except ValueError:
            raise self.error(f"{key}: non-numeric value", lineno) from None
        if count is not None and vals.size != count:
            raise self.error(f"{key}: expected {count} values, got {vals.size}", lineno)
        return vals


def parse_model(text: str, source=None) -> LstmStack:
    """Parse ROM text; any defect raises :class:`ParseError` with its line."""
    r = _Reader(text, source)
    if not r.records:
        raise r.error("empty model file")
    lineno, head = r.records[0]
    if head[0] != MAGIC or len(head) != 2:
        raise r.error(f"not a model file (expected '{MAGIC} <version>')", lineno)
    if head[1] != str(VERSION):
        raise UnsupportedVersionError(
            f"unsupported model file version {head[1]!r} (this reader handles {VERSION})",
            lineno, source,
        )
    r.pos = 1
    (n_layers,) = r.ints("layers", 1)
    if n_layers < 1:
        raise r.error("layer count must be >= 1", r.records[r.pos - 1][0])
    (width,) = r.ints("input_width", 1)
    hidden = r.ints("hidden", n_layers)
    (dropout,) = r.floats("dropout_rate", 1)
    (latency,) = r.ints("latency", 1)

    layers = []
    fan_in = width
    for k in range(n_layers):
        lineno, tokens = r.next("layer")
        if tokens != [str(k)]:
            raise r.error(f"expected 'layer {k}'", lineno)
        h = hidden[k]
        w = np.empty((4, h, fan_in))
        wr = np.empty((4, h, h))
        b = np.empty((4, h))
        for arr, key, cols in ((w, "w", fan_in), (wr, "wr", h)):
            for g, name in enumerate(GATES):
                for i in range(h):
                    arr[g, i] = r.floats(key, cols, gate=name)
        for g, name in enumerate(GATES):
            b[g] = r.floats("b", h, gate=name)
        layers.append(GateParams(w, wr, b))
        fan_in = h
    fc_w = r.floats("fc_w", hidden[-1])
    (fc_b,) = r.floats("fc_b", 1)
    post_fir = r.floats("post_fir")
    if post_fir.size < 1:
        raise r.error("post_fir needs at least one tap", r.records[r.pos - 1][0])
    r.next("end")
    if r.pos != len(r.records):
        raise r.error("trailing content after 'end'", r.records[r.pos][0])
    try:
        return LstmStack(layers, fc_w, fc_b, float(dropout), post_fir, int(latency))
    except ValueError as exc:
        raise r.error(str(exc)) from None


def load_model(path) -> LstmStack:
    path = Path(path)
    return parse_model(path.read_text(), source=str(path))
