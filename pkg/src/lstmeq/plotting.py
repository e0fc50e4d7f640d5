"""Matplotlib figures for the report outputs (rendered off-screen to PNG)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def _draw_eye(ax, h, title):
    counts = np.log1p(h.bins.T)
    extent = (0.0, h.phase_bins / h.ui_samples, h.amp_min, h.amp_max)
    ax.imshow(counts, origin="lower", aspect="auto", extent=extent, cmap="inferno",
              interpolation="nearest")
    ax.axhline(h.threshold, color="c", lw=0.6, ls="--")
    ax.set_xlabel("time (UI)")
    ax.set_ylabel("amplitude")
    ax.set_title(title)


def plot_eye(h, path, title: str = "eye") -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    _draw_eye(ax, h, title)
    fig.tight_layout()
    return _save(fig, path)


def plot_eye_grid(hists: dict, path) -> Path:
    fig, axes = plt.subplots(1, len(hists), figsize=(4.5 * len(hists), 4), squeeze=False)
    for ax, (name, h) in zip(axes[0], hists.items()):
        _draw_eye(ax, h, name)
    fig.tight_layout()
    return _save(fig, path)


def plot_overlay(t, tx, waves: dict, path) -> Path:
    fig, ax = plt.subplots(figsize=(9, 3.5))
    ax.plot(t * 1e9, tx, color="k", lw=1.2, label="tx")
    for name, y in waves.items():
        ax.plot(t * 1e9, y, lw=0.9, label=name)
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("amplitude")
    ax.legend(loc="upper right", fontsize="small", ncol=len(waves) + 1)
    fig.tight_layout()
    return _save(fig, path)


def plot_training(report, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    if report.train_loss:
        ax.semilogy(np.arange(1, len(report.train_loss) + 1), report.train_loss,
                    lw=0.6, alpha=0.6, label="train (batch)")
    if report.valid_loss:
        steps, vals = zip(*report.valid_loss)
        ax.semilogy(steps, vals, "o-", ms=3, label="validation")
    ax.set_xlabel("optimizer step")
    ax.set_ylabel("MSE")
    if report.train_loss or report.valid_loss:
        ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_impulse(h, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    t = np.arange(len(h)) * h.tap_period * 1e12
    ax.stem(t, h.taps, markerfmt=" ", basefmt=" ")
    ax.set_xlabel("time (ps)")
    ax.set_ylabel("tap")
    ax.set_title("channel impulse response")
    fig.tight_layout()
    return _save(fig, path)


def plot_pulse(pulse, cfg, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    t = np.arange(len(pulse)) * pulse.tap_period / cfg.bit_period
    ax.plot(t, pulse.taps)
    peak = int(np.argmax(np.abs(pulse.taps)))
    cursors = np.arange(peak % cfg.samples_per_bit, len(pulse), cfg.samples_per_bit)
    ax.plot(t[cursors], pulse.taps[cursors], "o", ms=3)
    ax.set_xlabel("time (UI)")
    ax.set_ylabel("amplitude")
    ax.set_title("single-bit pulse response")
    fig.tight_layout()
    return _save(fig, path)


def plot_sparameters(sp, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    f = sp.frequencies / 1e9
    ax.plot(f, sp.insertion_loss_db(), label="insertion loss |S21|")
    ax.plot(f, sp.return_loss_db(), label="return loss |S11|")
    ax.set_xlabel("frequency (GHz)")
    ax.set_ylabel("dB")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)
