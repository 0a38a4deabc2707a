"""Tremolo event detection on a single descriptor trajectory.

gate -> rate-adaptive smoothing -> normalise -> rectified first difference
-> peak picking -> IOIs, with the normalised trajectory exported as an
indexed control buffer.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from ._validation import AnalysisError, check_non_negative
from .selection import SmoothingConfig, lowpass

THRESHOLD_MODES = ("fixed", "adaptive")


class EmptyTraceError(AnalysisError):
    """Gating left no samples."""


@dataclass(frozen=True)
class DetectionTrace:
    values: np.ndarray
    timestamps: np.ndarray
    feature_rate: float
    feature_name: str = ""
    normalized: bool = False
    all_zero: bool = False
    # Per-sample level of the analysed audio, used by the RMS gate.
    rms: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        times = np.asarray(self.timestamps, dtype=np.float64)
        if values.ndim != 1 or values.shape != times.shape:
            raise ValueError("values and timestamps must be 1-D and of equal length")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "timestamps", times)
        if self.rms is not None:
            rms = np.asarray(self.rms, dtype=np.float64)
            if rms.shape != values.shape:
                raise ValueError("rms must align with values")
            object.__setattr__(self, "rms", rms)

    @classmethod
    def uniform(cls, values, feature_rate: float, t0: float = 0.0, **kw) -> "DetectionTrace":
        values = np.asarray(values, dtype=np.float64)
        return cls(values, t0 + np.arange(len(values)) / feature_rate, feature_rate, **kw)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def duration_s(self) -> float:
        return len(self) / self.feature_rate

    def _slice(self, sl: slice) -> "DetectionTrace":
        rms = self.rms[sl] if self.rms is not None else None
        return replace(self, values=self.values[sl], timestamps=self.timestamps[sl], rms=rms)


@dataclass(frozen=True)
class EventList:
    onsets: np.ndarray
    peak_values: np.ndarray

    def __len__(self) -> int:
        return len(self.onsets)


class IOIStats(NamedTuple):
    intervals_s: np.ndarray
    mean: float
    stdev: float
    rate_hz: float


@dataclass(frozen=True)
class ControlBuffer:
    index: np.ndarray
    time_s: np.ndarray
    value: np.ndarray

    def __len__(self) -> int:
        return len(self.index)


def gate(
    trace: DetectionTrace,
    start_trim_s: float = 0.25,
    end_trim_s: float = 0.25,
    rms_floor: float = 0.0,
) -> DetectionTrace:
    """Keep the steady part of a trace.

    Drops ``start_trim_s`` from the head and ``end_trim_s`` from the tail, then
    any leading or trailing samples whose companion RMS is below ``rms_floor``.
    """
    check_non_negative(start_trim_s, "start_trim_s")
    check_non_negative(end_trim_s, "end_trim_s")
    n = len(trace)
    head = int(round(start_trim_s * trace.feature_rate))
    tail = int(round(end_trim_s * trace.feature_rate))
    lo, hi = head, n - tail
    if rms_floor > 0:
        if trace.rms is None:
            raise ValueError("rms_floor > 0 needs a trace with companion rms")
        loud = np.flatnonzero(trace.rms[lo:hi] >= rms_floor) if hi > lo else np.array([], int)
        if loud.size == 0:
            hi = lo
        else:
            lo, hi = lo + loud[0], lo + loud[-1] + 1
    if hi <= lo:
        raise EmptyTraceError(
            f"gating left nothing of a {trace.duration_s:.3f} s trace "
            f"(trims {start_trim_s}/{end_trim_s} s, rms_floor {rms_floor})"
        )
    return trace._slice(slice(lo, hi))


def dominant_rate(trace: DetectionTrace, lo_hz: float = 0.5, hi_hz: float | None = None) -> float:
    """Frequency of the largest periodogram peak of ``trace`` in ``[lo_hz, hi_hz]``.

    ``hi_hz`` defaults to a quarter of the feature rate. Returns ``nan`` for a
    constant trace.
    """
    x = trace.values - trace.values.mean()
    n = len(x)
    if n < 8 or not np.any(x):
        return float("nan")
    hi_hz = trace.feature_rate / 4 if hi_hz is None else hi_hz
    nfft = 1 << int(np.ceil(np.log2(8 * n)))
    power = np.abs(np.fft.rfft(x * np.hanning(n), nfft)) ** 2
    freqs = np.fft.rfftfreq(nfft, 1.0 / trace.feature_rate)
    band = (freqs >= lo_hz) & (freqs <= hi_hz)
    if not np.any(band):
        return float("nan")
    return float(freqs[band][np.argmax(power[band])])


def smooth_to_rate(trace: DetectionTrace, factor: float = 2.0, ceiling_hz: float | None = None,
                   order: int = 2) -> DetectionTrace:
    """Low-pass ``trace`` at ``factor`` times its dominant modulation rate.

    A derivative amplifies whatever ripple rides on a slow modulation, so a
    fixed cutoff that suits 8 Hz leaves a 2 Hz trace full of split lobes.
    Tying the cutoff to the trace's own rate keeps one derivative lobe per
    cycle. ``factor <= 0`` disables the step.
    """
    if factor <= 0:
        return trace
    rate = dominant_rate(trace)
    if not np.isfinite(rate):
        return trace
    cutoff = factor * rate
    nyq = 0.999 * trace.feature_rate / 2
    cutoff = min(cutoff, nyq if ceiling_hz is None else min(ceiling_hz, nyq))
    values = lowpass(trace.values, trace.feature_rate, SmoothingConfig(cutoff, order))
    return replace(trace, values=values, normalized=False)


def normalize_trace(trace: DetectionTrace) -> DetectionTrace:
    """Zero mean, peak absolute deviation 1. A constant trace becomes zeros, flagged."""
    if len(trace) == 0:
        raise EmptyTraceError("cannot normalise an empty trace")
    dev = trace.values - trace.values.mean()
    scale = np.max(np.abs(dev))
    if scale <= 1e-12 * max(1.0, float(np.max(np.abs(trace.values)))):
        return replace(trace, values=np.zeros(len(trace)), normalized=True, all_zero=True)
    out = dev / scale
    return replace(trace, values=out, normalized=True, all_zero=False)


def detection_function(trace: DetectionTrace) -> DetectionTrace:
    """Half-wave rectified first difference; the first sample is 0."""
    if len(trace) < 3:
        raise ValueError("detection function needs at least 3 samples")
    d = np.zeros(len(trace))
    d[1:] = np.maximum(np.diff(trace.values), 0.0)
    return replace(trace, values=d, normalized=False, all_zero=not np.any(d))


def adaptive_threshold(values: np.ndarray, window: int, k: float) -> np.ndarray:
    """Centred sliding median plus ``k`` times the sliding median absolute deviation."""
    window = max(1, int(window)) | 1
    half = window // 2
    padded = np.pad(values, half, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, window)
    med = np.median(windows, axis=1)
    mad = np.median(np.abs(windows - med[:, None]), axis=1)
    return med + k * mad


def pick_peaks(
    df: DetectionTrace,
    threshold_mode: str = "adaptive",
    k: float = 1.0,
    min_spacing_s: float = 0.06,
    threshold: float = 0.1,
    window_s: float = 1.0,
) -> EventList:
    """Local maxima above threshold, thinned so survivors are ``min_spacing_s`` apart.

    Thinning is greedy by height: the largest peak is kept, everything closer
    than ``min_spacing_s`` to it is discarded, and so on.
    """
    if threshold_mode not in THRESHOLD_MODES:
        raise ValueError(f"threshold_mode must be one of {THRESHOLD_MODES}")
    if min_spacing_s < 2 / df.feature_rate:
        raise ValueError(
            f"min_spacing_s={min_spacing_s} is below two feature periods ({2 / df.feature_rate:.4f} s)"
        )
    v = df.values
    if len(v) < 3 or not np.any(v > 0):
        return EventList(np.zeros(0), np.zeros(0))
    if threshold_mode == "fixed":
        thr = np.full(len(v), float(threshold))
    else:
        thr = adaptive_threshold(v, round(window_s * df.feature_rate), k)

    inner = v[1:-1]
    is_peak = (inner > v[:-2]) & (inner >= v[2:]) & (inner > thr[1:-1])
    cand = np.flatnonzero(is_peak) + 1
    order = cand[np.lexsort((cand, -v[cand]))]
    times = df.timestamps
    kept: list[int] = []
    for i in order:
        if all(abs(times[i] - times[j]) >= min_spacing_s - 1e-12 for j in kept):
            kept.append(int(i))
    kept.sort()
    return EventList(times[kept].copy(), v[kept].copy())


def inter_onset_intervals(ev: EventList) -> IOIStats:
    if len(ev) < 2:
        raise AnalysisError(f"need at least 2 onsets for intervals, got {len(ev)}")
    iv = np.diff(ev.onsets)
    mean = float(iv.mean())
    return IOIStats(iv, mean, float(iv.std()), 1.0 / mean)


def export_control(trace: DetectionTrace) -> ControlBuffer:
    """One ``(index, time_s, value)`` entry per sample, time measured from the first sample."""
    if not trace.normalized:
        raise ValueError("export_control needs a normalised trace (see normalize_trace)")
    n = len(trace)
    idx = np.arange(n)
    return ControlBuffer(idx, idx / trace.feature_rate, np.clip(trace.values, -1.0, 1.0))


def write_events_csv(path, ev: EventList) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("onset_s", "peak_value"))
        for t, p in zip(ev.onsets, ev.peak_values):
            w.writerow((repr(float(t)), repr(float(p))))


def read_events_csv(path) -> EventList:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    data = np.array([[float(a), float(b)] for a, b in rows]).reshape(-1, 2)
    return EventList(data[:, 0], data[:, 1])


def write_control_csv(path, buf: ControlBuffer) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("index", "time_s", "value"))
        for i, t, v in zip(buf.index, buf.time_s, buf.value):
            w.writerow((int(i), repr(float(t)), repr(float(v))))


def read_control_csv(path) -> ControlBuffer:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    idx = np.array([int(r[0]) for r in rows], dtype=int)
    times = np.array([float(r[1]) for r in rows])
    vals = np.array([float(r[2]) for r in rows])
    return ControlBuffer(idx, times, vals)
