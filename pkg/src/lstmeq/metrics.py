"""Eye diagrams, eye measurements, BER with lag search, latency estimation."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .signal import BitStream, LinkConfig, Waveform


@dataclass
class EyeHistogram:
    """Phase x amplitude occupancy of a folded waveform.

    Columns are the ``span_ui * ui_samples`` sample phases of the fold, rows
    the amplitude bins between ``amp_min`` and ``amp_max``. The folded
    samples, their logic labels and the waveform's threshold crossings are
    kept as well, so measurements are not quantised to the bin grid.
    ``labels`` is 1/0 for samples attributed to a high/low bit and -1 for
    samples outside the labelled range.
    """

    bins: np.ndarray
    ui_samples: int
    amp_min: float
    amp_max: float
    total_count: int
    values: np.ndarray
    phase_index: np.ndarray
    labels: np.ndarray
    crossings: np.ndarray
    threshold: float
    centre: int
    span_ui: int = 2

    @property
    def phase_bins(self) -> int:
        return self.bins.shape[0]

    @property
    def amplitude_bins(self) -> int:
        return self.bins.shape[1]

    def merge(self, other: EyeHistogram) -> EyeHistogram:
        """Bin-wise sum of two histograms accumulated on the same grid."""
        if (self.bins.shape != other.bins.shape or self.amp_min != other.amp_min
                or self.amp_max != other.amp_max or self.ui_samples != other.ui_samples):
            raise DataError("histograms must share their grid to be merged")
        return EyeHistogram(
            self.bins + other.bins,
            self.ui_samples,
            self.amp_min,
            self.amp_max,
            self.total_count + other.total_count,
            np.concatenate([self.values, other.values]),
            np.concatenate([self.phase_index, other.phase_index]),
            np.concatenate([self.labels, other.labels]),
            np.concatenate([self.crossings, other.crossings]),
            self.threshold,
            self.centre,
            self.span_ui,
        )

    def to_csv(self, path):
        """Bin counts, one row per amplitude bin (highest first)."""
        edges = np.linspace(self.amp_min, self.amp_max, self.amplitude_bins + 1)
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["amplitude"] + [f"phase_{k}" for k in range(self.phase_bins)])
            for row in range(self.amplitude_bins - 1, -1, -1):
                centre = 0.5 * (edges[row] + edges[row + 1])
                w.writerow([repr(float(centre))] + [int(v) for v in self.bins[:, row]])


@dataclass
class EyeReport:
    eye_height: float
    eye_width: float
    rms_jitter: float
    crossing_level: float


EYE_REPORT_FIELDS = ("eye_height", "eye_width", "rms_jitter", "crossing_level")


def decision_level(samples: np.ndarray) -> float:
    """Two-cluster midpoint: mean of the upper and lower halves about the mean.

    Shifts and positive scalings of the data move the level with it, which
    keeps eye measurements invariant under those transforms.
    """
    x = np.asarray(samples, dtype=float)
    if x.max() == x.min():
        return float(x[0])
    mu = x.mean()
    hi = x[x >= mu]
    lo = x[x < mu]
    if lo.size == 0 or hi.size == 0:
        return float(mu)
    return float(0.5 * (hi.mean() + lo.mean()))


def _crossing_times(x: np.ndarray, thr: float) -> np.ndarray:
    above = x >= thr
    k = np.flatnonzero(above[1:] != above[:-1])
    a, b = x[k], x[k + 1]
    return k + (thr - a) / (b - a)


def _circular_mean(phases: np.ndarray) -> float:
    ang = 2 * np.pi * phases
    return float((np.arctan2(np.sin(ang).mean(), np.cos(ang).mean()) / (2 * np.pi)) % 1.0)


def samples_per_ui(w: Waveform, cfg: LinkConfig) -> int:
    ratio = cfg.bit_period / w.sample_period
    ui = int(round(ratio))
    if ui < 1 or abs(ratio - ui) > 1e-6 * ratio:
        raise DataError("waveform sample period must divide the bit period")
    return ui


def accumulate_eye(
    w: Waveform,
    cfg: LinkConfig,
    phase_offset: int = 0,
    span_ui: int = 2,
    bits: BitStream | None = None,
    max_lag: int = 16,
    amplitude_bins: int = 128,
) -> EyeHistogram:
    """Fold ``w`` modulo ``span_ui`` unit intervals into a histogram.

    The amplitude axis spans the data range padded by 5 % each side. The
    eye centre is the phase opposite the mean threshold crossing; every
    sample belongs to the unit interval centred there. With ``bits`` (the
    transmitted stream) samples are labelled by the bit of their interval,
    at the lag in ``[-max_lag, max_lag]`` intervals that best matches the centre decisions;
    without it they are labelled by the centre decision itself.
    """
    if len(w) == 0:
        raise DataError("cannot build an eye from an empty waveform")
    ui = samples_per_ui(w, cfg)
    if len(w) < ui:
        raise DataError("waveform is shorter than one unit interval")
    x = w.samples
    lo, hi = float(x.min()), float(x.max())
    pad = 0.05 * (hi - lo) if hi > lo else 0.05 * max(abs(hi), 1.0)
    amp_min, amp_max = lo - pad, hi + pad
    cols = span_ui * ui
    idx = np.arange(x.size) - phase_offset
    phase = idx % cols
    row = np.clip(((x - amp_min) / (amp_max - amp_min) * amplitude_bins).astype(int), 0, amplitude_bins - 1)
    bins = np.zeros((cols, amplitude_bins), dtype=np.int64)
    np.add.at(bins, (phase, row), 1)

    thr = decision_level(x)
    cross = ((_crossing_times(x, thr) - phase_offset) % ui) / ui
    centre = int(round(((_circular_mean(cross) + 0.5) % 1.0) * ui)) % ui if cross.size else ui // 2

    # Interval number of each sample, intervals centred on the eye centre.
    interval = (idx - centre + ui // 2) // ui
    first = int(interval.min())
    n_int = int(interval.max()) - first + 1
    centre_val = np.full(n_int, np.nan)
    at_centre = (idx % ui) == centre
    centre_val[interval[at_centre] - first] = x[at_centre]
    decided = np.where(np.isnan(centre_val), -1, centre_val >= thr).astype(np.int8)
    if bits is None:
        per_interval = decided
    else:
        tx = bits.bits.astype(np.int8)
        k = np.arange(n_int) + first
        best = None
        for lag in range(-max_lag, max_lag + 1):
            b = k - lag
            ok = (b >= 0) & (b < tx.size) & (decided >= 0)
            if not ok.any():
                continue
            err = np.count_nonzero(decided[ok] != tx[b[ok]]) / ok.sum()
            if best is None or err < best[0]:
                best = (err, lag)
        if best is None:
            raise DataError("waveform and bit stream do not overlap")
        b = k - best[1]
        ok = (b >= 0) & (b < tx.size)
        per_interval = np.full(n_int, -1, dtype=np.int8)
        per_interval[ok] = tx[b[ok]]
    labels = per_interval[interval - first]
    return EyeHistogram(bins, ui, amp_min, amp_max, int(x.size), x.copy(), idx % ui,
                        labels, cross, thr, centre, span_ui)


def eye_metrics(h: EyeHistogram, cfg: LinkConfig | None = None) -> EyeReport:
    """Inner eye opening, width and crossing jitter.

    * height: lowest high-labelled sample minus highest low-labelled sample
      in the eye-centre phase column;
    * width: widest circular run of phase columns with positive height, as
      a fraction of the unit interval;
    * jitter: RMS deviation of the threshold-crossing phases about their
      circular mean, in UI.

    ``crossing_level`` is the two-cluster decision level of the waveform.
    A closed eye gives a non-positive height and zero width.
    """
    values, phase, labels = h.values, h.phase_index, h.labels
    if not (np.any(labels == 1) and np.any(labels == 0)):
        raise DataError("eye needs both logic levels to be present")
    ui = h.ui_samples
    closed = -(h.amp_max - h.amp_min)
    heights = np.full(ui, closed)
    for p in range(ui):
        col = phase == p
        top, bottom = values[col & (labels == 1)], values[col & (labels == 0)]
        if top.size and bottom.size:
            heights[p] = top.min() - bottom.max()

    if h.crossings.size:
        mu = _circular_mean(h.crossings)
        dev = (h.crossings - mu + 0.5) % 1.0 - 0.5
        jitter = float(np.sqrt(np.mean(dev**2)))
    else:
        jitter = 0.0

    open_ = heights > 0
    if open_.all():
        width = 1.0
    else:
        # Longest circular run of open columns.
        run = best = 0
        for flag in np.concatenate([open_, open_]):
            run = run + 1 if flag else 0
            best = max(best, run)
        width = min(best, ui) / ui
    return EyeReport(float(heights[h.centre]), float(width), jitter, h.threshold)


def ber(tx: BitStream, rx: BitStream, max_lag: int = 0, min_overlap: int = 100) -> tuple[float, int]:
    """Bit error rate of ``rx`` against ``tx`` at the best lag in ``[0, max_lag]``.

    ``rx[k + lag]`` is compared with ``tx[k]``.
    """
    a, b = tx.bits, rx.bits
    best = None
    for lag in range(max_lag + 1):
        n = min(a.size, b.size - lag)
        if n < min_overlap:
            continue
        errors = int(np.count_nonzero(a[:n] != b[lag:lag + n]))
        rate = errors / n
        if best is None or rate < best[0]:
            best = (rate, lag)
    if best is None:
        raise DataError(f"streams overlap by fewer than {min_overlap} bits at every lag")
    return best


def estimate_latency(tx: BitStream, ticks: Waveform, cfg: LinkConfig, max_lag: int,
                     phase: int = 0) -> int:
    """Tick lag maximising the correlation of ``ticks`` with the delayed bit levels."""
    x = ticks.samples - ticks.samples.mean()
    bit_of_tick = (phase + np.arange(x.size) * cfg.tick_period) // cfg.samples_per_bit
    best_lag, best_val = 0, -np.inf
    for lag in range(max_lag + 1):
        idx = bit_of_tick[: x.size - lag]
        ok = idx < len(tx)
        if not np.any(ok):
            break
        s = cfg.levels(tx.bits[idx[ok]])
        s = s - s.mean()
        val = float(np.dot(x[lag:][ok], s) / ok.sum())
        if val > best_val:
            best_lag, best_val = lag, val
    return best_lag


def render_eye(h: EyeHistogram, path) -> Path:
    """Write the histogram as a binary PGM image (one pixel per bin).

    Columns are phase, rows amplitude with the highest amplitude on top;
    intensity is log-scaled count, empty bins are black.
    """
    counts = h.bins.T[::-1]
    img = np.zeros(counts.shape, dtype=np.uint8)
    peak = counts.max()
    if peak > 0:
        nz = counts > 0
        level = np.log1p(counts[nz]) / np.log1p(peak) * 255.0
        img[nz] = np.clip(np.round(level), 1, 255).astype(np.uint8)
    path = Path(path)
    rows, cols = img.shape
    with path.open("wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    """Read a PGM written by :func:`render_eye` back into an array."""
    magic, size, _maxval, pixels = Path(path).read_bytes().split(b"\n", 3)
    if magic != b"P5":
        raise DataError("not a binary PGM file")
    cols, rows = (int(v) for v in size.split())
    return np.frombuffer(pixels, dtype=np.uint8, count=rows * cols).reshape(rows, cols)


def write_eye_reports_csv(path, reports: dict):
    """One row per pipeline name, fixed column order."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pipeline", *EYE_REPORT_FIELDS])
        for name, rep in reports.items():
            d = asdict(rep)
            w.writerow([name] + [repr(float(d[k])) for k in EYE_REPORT_FIELDS])
