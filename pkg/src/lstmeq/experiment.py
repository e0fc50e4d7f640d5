"""Experiment configuration and the end-to-end pipelines behind the CLI.

A configuration is one YAML file with labelled sections (``link``,
``channel``, ``noise``, ``bits``, ``model``, ``training``, ``baseline``,
``seeds``, ``eye``, ``output``). Relative paths inside it resolve against
the file's directory. Every pipeline writes only below the output
directory and finishes with a ``manifest-<command>.json`` recording the
resolved configuration, its hash, the seeds and the hash of every output.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import plotting
from .baseline import Baseline, DfeTaps, FfeTaps, fit_baseline, pulse_response, run_baseline
from .channel import (
    ImpulseResponse,
    add_awgn,
    apply_channel,
    lossy_channel_per_ui,
    read_impulse_csv,
    resample_impulse,
    s21_to_impulse,
    write_impulse_csv,
)
from .errors import ConfigError
from .lstm import LstmStack, equalize_stream
from .metrics import (
    EyeHistogram,
    EyeReport,
    accumulate_eye,
    ber,
    eye_metrics,
    render_eye,
    write_eye_reports_csv,
)
from .rom import load_model, save_model
from .signal import (
    BitStream,
    LinkConfig,
    Waveform,
    generate_bits,
    modulate_nrz,
    write_bits_csv,
    write_waveform_csv,
)
from .touchstone import read_touchstone
from .training import TrainConfig, build_dataset, init_for_link, train

log = logging.getLogger(__name__)

SEED_NAMES = ("bits", "noise", "init", "dropout", "shuffle")
SPLITS = ("train", "valid", "test")
PIPELINES = ("none", "ffe-dfe", "lstm")


@dataclass
class ChannelSpec:
    kind: str  # "synthetic", "impulse_csv" or "touchstone"
    decay_per_ui: float = 0.6
    echo_delay_ui: float = 0.0
    echo_gain: float = 0.0
    length_ui: float = 12.0
    path: Path | None = None
    n_fft: int = 4096
    window: str = "none"


@dataclass
class BitsSpec:
    train: int = 3000
    valid: int = 500
    test: int = 10000
    pattern: str = "bernoulli"


@dataclass
class ModelSpec:
    hidden: list = field(default_factory=lambda: [20])
    dropout_rate: float = 0.0
    latency: int = 4
    post_fir: list | None = None
    resume: Path | None = None


@dataclass
class BaselineSpec:
    n_pre: int = 2
    n_post: int = 4
    n_dfe: int = 6
    ffe: FfeTaps | None = None
    dfe: DfeTaps | None = None
    decision_offset: int | None = None

    @property
    def fitted(self) -> bool:
        return self.ffe is None


@dataclass
class EyeSpec:
    skip_ui: int = 16
    span_ui: int = 2
    amplitude_bins: int = 128
    overlay_ui: int = 64


@dataclass
class ExperimentConfig:
    link: LinkConfig
    channel: ChannelSpec
    noise_sigma: float
    bits: BitsSpec
    model: ModelSpec
    training: TrainConfig
    baseline: BaselineSpec
    seeds: dict
    eye: EyeSpec
    output: Path
    raw: dict = field(default_factory=dict, repr=False)
    base_dir: Path = field(default_factory=Path.cwd, repr=False)

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------- loading

class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``5e9``-style floats (YAML 1.2 rule)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                |[-+]?\.(?:inf|Inf|INF)
                |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"config section '{name}' must be a mapping")
    return sec


def _build(cls, sec: dict, name: str, **extra):
    known = {f.name for f in fields(cls)}
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in '{name}': {', '.join(sorted(unknown))}")
    try:
        return cls(**sec, **extra)
    except TypeError as exc:
        raise ConfigError(f"bad '{name}' section: {exc}") from None


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


def _existing(base: Path, p, what: str) -> Path:
    path = _resolve(base, p)
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _channel_spec(sec: dict, base: Path) -> ChannelSpec:
    sources = [k for k in ("synthetic", "impulse_csv", "touchstone") if k in sec]
    if len(sources) != 1:
        raise ConfigError(
            "channel needs exactly one of 'synthetic', 'impulse_csv' or 'touchstone'"
        )
    kind = sources[0]
    body = sec[kind]
    if kind == "synthetic":
        return _build(ChannelSpec, dict(body or {}), "channel.synthetic", kind=kind)
    if kind == "impulse_csv":
        return ChannelSpec(kind, path=_existing(base, body, "impulse CSV file"))
    if isinstance(body, str):
        body = {"path": body}
    body = dict(body)
    path = _existing(base, body.pop("path", None) or "", "touchstone file")
    return _build(ChannelSpec, body, "channel.touchstone", kind=kind, path=path)


def _baseline_spec(sec: dict) -> BaselineSpec:
    sec = dict(sec)
    taps = sec.pop("taps", None)
    fit = sec.pop("fit", None)
    offset = sec.pop("decision_offset", None)
    if sec:
        raise ConfigError(f"unknown key(s) in 'baseline': {', '.join(sorted(sec))}")
    if taps is not None and fit is not None:
        raise ConfigError("baseline takes either 'taps' or 'fit', not both")
    if taps is None:
        spec = _build(BaselineSpec, dict(fit or {}), "baseline.fit")
        spec.decision_offset = offset
        return spec
    try:
        ffe = FfeTaps(taps.get("precursors", []), taps["main"], taps.get("postcursors", []))
        dfe = DfeTaps(taps.get("dfe", []), taps.get("threshold", 0.5))
    except KeyError as exc:
        raise ConfigError(f"baseline.taps is missing {exc}") from None
    return BaselineSpec(len(ffe.precursors), len(ffe.postcursors), len(dfe.taps), ffe, dfe, offset)


def seeds_from(base: int) -> dict:
    """Named seeds derived from one integer, used by ``--seed``."""
    return {name: int(base) + k for k, name in enumerate(SEED_NAMES)}


def parse_config(raw: dict, base_dir: Path, seed: int | None = None,
                 out: str | Path | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of sections")
    raw = copy.deepcopy(raw)
    known = {"link", "channel", "noise", "bits", "model", "training", "baseline",
             "seeds", "eye", "output"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    if seed is not None:
        raw["seeds"] = seeds_from(seed)
    if out is not None:
        # Command-line paths are relative to the working directory.
        raw["output"] = str(Path(out).resolve())

    link = _build(LinkConfig, _section(raw, "link"), "link")
    channel = _channel_spec(_section(raw, "channel"), base_dir)
    sigma = float(_section(raw, "noise").get("sigma", 0.0))
    if sigma < 0:
        raise ConfigError("noise.sigma must be >= 0")
    bits = _build(BitsSpec, _section(raw, "bits"), "bits")
    for split in SPLITS:
        if getattr(bits, split) < 1:
            raise ConfigError(f"bits.{split} must be >= 1")
    model = _build(ModelSpec, _section(raw, "model"), "model")
    if model.resume is not None:
        model.resume = _existing(base_dir, model.resume, "model ROM")
    seeds = {name: 0 for name in SEED_NAMES}
    given = _section(raw, "seeds")
    bad = set(given) - set(SEED_NAMES)
    if bad:
        raise ConfigError(f"unknown seed name(s): {', '.join(sorted(bad))}")
    seeds.update({k: int(v) for k, v in given.items()})
    tsec = dict(_section(raw, "training"))
    tsec.setdefault("seed", seeds["shuffle"])
    tsec.setdefault("dropout_seed", seeds["dropout"])
    training = _build(TrainConfig, tsec, "training")
    baseline = _baseline_spec(_section(raw, "baseline"))
    eye = _build(EyeSpec, _section(raw, "eye"), "eye")
    output = _resolve(base_dir, raw.get("output") or "out")
    return ExperimentConfig(link, channel, sigma, bits, model, training, baseline,
                            seeds, eye, output, raw, base_dir)


def load_config(path, seed: int | None = None, out=None) -> ExperimentConfig:
    """Read a YAML config (or a manifest, whose ``config`` entry is used)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.load(path.read_text(), Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if isinstance(raw, dict) and "manifest_version" in raw:
        base = Path(raw.get("config_dir", path.parent))
        raw = raw["config"]
    else:
        base = path.parent
    return parse_config(raw, base.resolve(), seed, out)


# ---------------------------------------------------------------- building blocks

def build_channel(cfg: ExperimentConfig) -> ImpulseResponse:
    """The configured channel, sampled at the link's sample period."""
    ch, link = cfg.channel, cfg.link
    if ch.kind == "synthetic":
        return lossy_channel_per_ui(ch.decay_per_ui, ch.echo_delay_ui, ch.echo_gain,
                                    link.samples_per_bit, link.sample_period, ch.length_ui)
    if ch.kind == "impulse_csv":
        h = read_impulse_csv(ch.path)
    else:
        h = s21_to_impulse(read_touchstone(ch.path), ch.n_fft, ch.window)
    return resample_impulse(h, link.sample_period)


@dataclass
class Link:
    tx: BitStream
    tx_wave: Waveform
    rx: Waveform


def simulate_split(cfg: ExperimentConfig, h: ImpulseResponse, split: str) -> Link:
    """Bits, transmitted and received waveforms of one data split.

    Splits draw from the ``bits``/``noise`` seeds offset by their index, so
    train, validation and test never share a realisation.
    """
    k = SPLITS.index(split)
    count = getattr(cfg.bits, split)
    tx = generate_bits(cfg.seeds["bits"] * 3 + k, count, cfg.bits.pattern)
    wave = modulate_nrz(tx, cfg.link)
    rx = add_awgn(apply_channel(wave, h), cfg.noise_sigma, cfg.seeds["noise"] * 3 + k)
    return Link(tx, wave, rx)


def resolve_baseline(cfg: ExperimentConfig, h: ImpulseResponse) -> Baseline:
    spec = cfg.baseline
    if spec.fitted:
        b = fit_baseline(h, cfg.link, spec.n_pre, spec.n_post, spec.n_dfe)
        if spec.decision_offset is not None:
            b.decision_offset = int(spec.decision_offset)
        return b
    offset = spec.decision_offset
    if offset is None:
        pulse = pulse_response(h, cfg.link)
        offset = int(np.argmax(np.abs(pulse.taps))) + spec.ffe.n_pre * cfg.link.samples_per_bit
    return Baseline(spec.ffe, spec.dfe, int(offset), {"source": "config"})


def baseline_to_dict(b: Baseline) -> dict:
    return {
        "taps": {
            "precursors": [float(v) for v in b.ffe.precursors],
            "main": float(b.ffe.main),
            "postcursors": [float(v) for v in b.ffe.postcursors],
            "dfe": [float(v) for v in b.dfe.taps],
            "threshold": float(b.dfe.threshold),
        },
        "decision_offset": int(b.decision_offset),
    }


def initial_model(cfg: ExperimentConfig) -> LstmStack:
    if cfg.model.resume is not None:
        return load_model(cfg.model.resume)
    m = init_for_link(cfg.link, cfg.model.hidden, cfg.seeds["init"],
                      cfg.model.dropout_rate, cfg.model.latency)
    if cfg.model.post_fir is not None:
        m.post_fir = np.asarray(cfg.model.post_fir, dtype=float)
    return m


def eye_of(w: Waveform, tx: BitStream, cfg: ExperimentConfig) -> tuple[EyeHistogram, EyeReport]:
    """Eye of ``w`` after dropping the start-up transient of ``skip_ui`` bits."""
    ui = int(round(cfg.link.bit_period / w.sample_period))
    skip = min(cfg.eye.skip_ui, max(0, len(tx) // 4))
    trimmed = Waveform(w.samples[skip * ui:], w.sample_period)
    h = accumulate_eye(trimmed, cfg.link, span_ui=cfg.eye.span_ui,
                       bits=BitStream(tx.bits[skip:]), amplitude_bins=cfg.eye.amplitude_bins)
    return h, eye_metrics(h, cfg.link)


def _hold(w: Waveform, factor: int, sample_period: float) -> Waveform:
    return Waveform(np.repeat(w.samples, factor), sample_period)


def _best_shift(ref: np.ndarray, x: np.ndarray, max_shift: int) -> int:
    """Delay of ``x`` behind ``ref`` (samples) maximising their correlation."""
    r = ref - ref.mean()
    y = x - x.mean()
    best, arg = -np.inf, 0
    for s in range(max_shift + 1):
        n = min(r.size, y.size - s)
        if n <= 0:
            break
        v = float(np.dot(r[:n], y[s:s + n])) / n
        if v > best:
            best, arg = v, s
    return arg


# ---------------------------------------------------------------- outputs

class Outputs:
    """Collects files written under the output directory for the manifest."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.root / name
        self.files.append(p)
        return p

    def manifest(self, command: str, cfg: ExperimentConfig, extra: dict | None = None) -> Path:
        entries = {}
        for p in sorted(set(self.files)):
            entries[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        doc = {
            "manifest_version": 1,
            "command": command,
            "config_sha256": cfg.config_hash,
            "config": cfg.raw,
            "config_dir": str(cfg.base_dir),
            "seeds": cfg.seeds,
            "outputs": entries,
        }
        if extra:
            doc["results"] = extra
        path = self.root / f"manifest-{command}.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path


def _write_json(path: Path, data):
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- commands

def cmd_simulate(cfg: ExperimentConfig) -> dict:
    """Simulate every split; write waveforms, the channel and the raw eye."""
    out = Outputs(cfg.output)
    h = build_channel(cfg)
    write_impulse_csv(out.path("channel_impulse.csv"), h)
    for split in SPLITS:
        link = simulate_split(cfg, h, split)
        write_bits_csv(out.path(f"{split}_tx_bits.csv"), link.tx, cfg.link.bit_period)
        write_waveform_csv(out.path(f"{split}_tx_waveform.csv"), link.tx_wave)
        write_waveform_csv(out.path(f"{split}_rx_waveform.csv"), link.rx)
    test = simulate_split(cfg, h, "test")
    hist, rep = eye_of(test.rx, test.tx, cfg)
    render_eye(hist, out.path("eye_none.pgm"))
    hist.to_csv(out.path("eye_none_histogram.csv"))
    write_eye_reports_csv(out.path("eye_none_report.csv"), {"none": rep})
    plotting.plot_eye(hist, out.path("eye_none.png"), "unequalized")
    plotting.plot_impulse(h, out.path("channel_impulse.png"))
    if cfg.channel.kind == "touchstone":
        plotting.plot_sparameters(read_touchstone(cfg.channel.path), out.path("sparameters.png"))
    result = {"eye_none": asdict(rep)}
    out.manifest("simulate", cfg, result)
    return result


def cmd_fit_baseline(cfg: ExperimentConfig) -> dict:
    """Fit (or load) the FFE-DFE taps and score them on the test split."""
    out = Outputs(cfg.output)
    h = build_channel(cfg)
    b = resolve_baseline(cfg, h)
    with out.path("baseline.yaml").open("w") as fh:
        yaml.safe_dump({"baseline": baseline_to_dict(b)}, fh, sort_keys=False)
    test = simulate_split(cfg, h, "test")
    bits, wave = run_baseline(b, test.rx, cfg.link)
    rate, lag = ber(test.tx, bits, max_lag=8)
    hist, rep = eye_of(wave, test.tx, cfg)
    render_eye(hist, out.path("eye_ffe-dfe.pgm"))
    plotting.plot_eye(hist, out.path("eye_ffe-dfe.png"), "FFE-DFE")
    plotting.plot_pulse(pulse_response(h, cfg.link), cfg.link, out.path("pulse_response.png"))
    result = {"ber": rate, "lag": lag, "eye": asdict(rep),
              "ffe_residual": b.info.get("ffe_residual")}
    _write_json(out.path("baseline_result.json"), result)
    out.manifest("fit-baseline", cfg, result)
    return result


def cmd_train(cfg: ExperimentConfig) -> dict:
    """Train the equalizer; write the ROM, the loss history and its plot."""
    out = Outputs(cfg.output)
    h = build_channel(cfg)
    m0 = initial_model(cfg)
    latency = m0.latency
    tr = simulate_split(cfg, h, "train")
    va = simulate_split(cfg, h, "valid")
    train_ds = build_dataset(tr.tx, tr.rx, cfg.link, latency)
    valid_ds = build_dataset(va.tx, va.rx, cfg.link, latency)
    log.info("training on %d windows, validating on %d", len(train_ds), len(valid_ds))
    report = train(m0, train_ds, valid_ds, cfg.training)
    save_model(report.model, out.path("model.rom"))
    report.to_csv(out.path("train_report.csv"))
    plotting.plot_training(report, out.path("train_loss.png"))
    result = {
        "steps": len(report.train_loss),
        "best_step": report.best_step,
        "best_valid_loss": report.best_valid_loss,
        "stop_reason": report.stop_reason,
    }
    out.manifest("train", cfg, result)
    return result


def _model_path(cfg: ExperimentConfig, model_path) -> Path:
    path = Path(model_path) if model_path is not None else cfg.output / "model.rom"
    if not path.is_file():
        raise ConfigError(f"model ROM not found: {path} (run 'train' first or pass --model)")
    return path


def cmd_evaluate(cfg: ExperimentConfig, model_path=None) -> dict:
    """Score a trained model on the test split: BER and eye."""
    out = Outputs(cfg.output)
    m = load_model(_model_path(cfg, model_path))
    h = build_channel(cfg)
    test = simulate_split(cfg, h, "test")
    analog, bits = equalize_stream(m, test.rx, cfg.link)
    rate, lag = ber(test.tx, bits, max_lag=8)
    hist, rep = eye_of(analog, test.tx, cfg)
    write_waveform_csv(out.path("lstm_output.csv"), analog)
    render_eye(hist, out.path("eye_lstm.pgm"))
    plotting.plot_eye(hist, out.path("eye_lstm.png"), "LSTM")
    write_eye_reports_csv(out.path("eye_lstm_report.csv"), {"lstm": rep})
    result = {"ber": rate, "lag": lag, "eye": asdict(rep)}
    _write_json(out.path("evaluate_result.json"), result)
    out.manifest("evaluate", cfg, result)
    return result


def run_pipelines(cfg: ExperimentConfig, m: LstmStack, h: ImpulseResponse, test: Link):
    """The three receivers over one received waveform.

    Returns ``{name: (waveform, bits or None)}``; the raw receiver slices
    the waveform at the channel's pulse peak.
    """
    link = cfg.link
    spb = link.samples_per_bit
    peak = int(np.argmax(np.abs(pulse_response(h, link).taps)))
    raw_bits = BitStream((test.rx.samples[peak::spb] >= link.threshold).astype(np.uint8))
    b_bits, b_wave = run_baseline(resolve_baseline(cfg, h), test.rx, link)
    analog, l_bits = equalize_stream(m, test.rx, link)
    return {"none": (test.rx, raw_bits), "ffe-dfe": (b_wave, b_bits), "lstm": (analog, l_bits)}


def cmd_compare(cfg: ExperimentConfig, model_path=None) -> dict:
    """All three receivers on the same test realisation, side by side."""
    out = Outputs(cfg.output)
    m = load_model(_model_path(cfg, model_path))
    h = build_channel(cfg)
    test = simulate_split(cfg, h, "test")
    results = run_pipelines(cfg, m, h, test)
    link = cfg.link
    reports, bers, hists, aligned = {}, {}, {}, {}
    n_over = min(len(test.tx_wave), cfg.eye.overlay_ui * link.samples_per_bit)
    start = min(cfg.eye.skip_ui, len(test.tx) // 4) * link.samples_per_bit
    for name in PIPELINES:
        wave, bits = results[name]
        hist, rep = eye_of(wave, test.tx, cfg)
        reports[name], hists[name] = rep, hist
        rate, lag = ber(test.tx, bits, max_lag=8, min_overlap=min(100, len(test.tx) // 2))
        bers[name] = (rate, lag, len(bits))
        render_eye(hist, out.path(f"eye_{name}.pgm"))
        full = wave
        if wave.sample_period != link.sample_period:
            factor = int(round(wave.sample_period / link.sample_period))
            full = _hold(wave, factor, link.sample_period)
        shift = _best_shift(test.tx_wave.samples, full.samples, 8 * link.samples_per_bit)
        seg = full.samples[start + shift:start + shift + n_over]
        aligned[name] = np.pad(seg, (0, n_over - seg.size), constant_values=np.nan)
    write_eye_reports_csv(out.path("eye_reports.csv"), reports)
    with out.path("ber.csv").open("w") as fh:
        fh.write("pipeline,ber,lag_bits,decided_bits\n")
        for name, (rate, lag, n) in bers.items():
            fh.write(f"{name},{rate!r},{lag},{n}\n")
    tx_seg = test.tx_wave.samples[start:start + n_over]
    t = (np.arange(tx_seg.size) + start) * link.sample_period
    with out.path("waveform_overlay.csv").open("w") as fh:
        fh.write("time_s,tx," + ",".join(PIPELINES) + "\n")
        for k in range(tx_seg.size):
            row = [repr(float(t[k])), repr(float(tx_seg[k]))]
            row += [repr(float(aligned[name][k])) for name in PIPELINES]
            fh.write(",".join(row) + "\n")
    plotting.plot_eye_grid(hists, out.path("eye_compare.png"))
    plotting.plot_overlay(t, tx_seg, aligned, out.path("waveform_overlay.png"))
    result = {
        name: {"ber": bers[name][0], "lag": bers[name][1], **asdict(reports[name])}
        for name in PIPELINES
    }
    out.manifest("compare", cfg, result)
    return result


def cmd_render_eye(cfg: ExperimentConfig, waveform_path, bits_path=None) -> dict:
    """Eye image and report of any waveform CSV (optionally labelled by bits)."""
    from .signal import read_bits_csv, read_waveform_csv

    wpath = Path(waveform_path)
    if not wpath.is_file():
        raise ConfigError(f"waveform CSV not found: {wpath}")
    w = read_waveform_csv(wpath)
    bits = None
    if bits_path is not None:
        bpath = Path(bits_path)
        if not bpath.is_file():
            raise ConfigError(f"bits CSV not found: {bpath}")
        bits = read_bits_csv(bpath)
    out = Outputs(cfg.output)
    hist = accumulate_eye(w, cfg.link, span_ui=cfg.eye.span_ui, bits=bits,
                          amplitude_bins=cfg.eye.amplitude_bins)
    rep = eye_metrics(hist, cfg.link)
    stem = wpath.stem
    render_eye(hist, out.path(f"eye_{stem}.pgm"))
    hist.to_csv(out.path(f"eye_{stem}_histogram.csv"))
    write_eye_reports_csv(out.path(f"eye_{stem}_report.csv"), {stem: rep})
    plotting.plot_eye(hist, out.path(f"eye_{stem}.png"), stem)
    result = asdict(rep)
    out.manifest("render-eye", cfg, result)
    return result
