"""Fundamental frequency estimation and harmonic partial picking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .audio import Spectrum, window_kernel_table

DEFAULT_FMIN = 70.0
DEFAULT_FMAX = 1200.0
VOICING_THRESHOLD = 0.5
# The chosen lag is the first dip of the cumulative-mean-normalised
# difference within max(DIP_RATIO * best, best + DIP_MARGIN) of the best dip.
DIP_RATIO = 1.5
DIP_MARGIN = 0.02


@dataclass(frozen=True)
class F0Estimate:
    f0: float
    confidence: float

    @property
    def voiced(self) -> bool:
        return self.f0 > 0


@dataclass(frozen=True)
class HarmonicPeaks:
    f0: float
    harmonics: np.ndarray  # 1-based indices
    freqs: np.ndarray
    amps: np.ndarray
    max_h: int

    @classmethod
    def empty(cls, max_h: int = 0) -> "HarmonicPeaks":
        z = np.zeros(0)
        return cls(0.0, np.zeros(0, dtype=int), z, z, max_h)

    def __len__(self) -> int:
        return len(self.amps)


class EnergySplit(NamedTuple):
    harmonic_energy: float
    noise_energy: float
    total_energy: float


def _difference_function(x: np.ndarray, tau_max: int) -> np.ndarray:
    """d(tau) = sum_{j<W} (x_j - x_{j+tau})**2 for tau in [0, tau_max], W = len(x) - tau_max."""
    w = len(x) - tau_max
    size = 1 << int(np.ceil(np.log2(len(x) + w)))
    fx = np.fft.rfft(x, size)
    fh = np.fft.rfft(x[:w][::-1], size)
    cross = np.fft.irfft(fx * fh, size)[w - 1 : w + tau_max]
    sq = np.concatenate(([0.0], np.cumsum(x**2)))
    energy_head = sq[w]
    energy_lag = sq[w : w + tau_max + 1] - sq[: tau_max + 1]
    return np.maximum(energy_head + energy_lag - 2.0 * cross, 0.0)


def _parabolic_offset(a: float, b: float, c: float) -> float:
    denom = a - 2.0 * b + c
    if denom == 0:
        return 0.0
    return float(np.clip(0.5 * (a - c) / denom, -0.5, 0.5))


def estimate_f0(
    frame,
    sample_rate: int,
    fmin: float = DEFAULT_FMIN,
    fmax: float = DEFAULT_FMAX,
    voicing_threshold: float = VOICING_THRESHOLD,
) -> F0Estimate:
    """Monophonic pitch from the normalised difference function of ``frame``.

    The lag minimum is refined by parabolic interpolation. Confidence is one
    minus the normalised difference at the chosen lag; frames below
    ``voicing_threshold`` are reported unvoiced (``f0 == 0``).
    """
    x = np.asarray(frame, dtype=np.float64)
    if not 0 < fmin < fmax < sample_rate / 2:
        raise ValueError("require 0 < fmin < fmax < Nyquist")
    tau_min = max(2, int(np.floor(sample_rate / fmax)))
    tau_max = int(np.ceil(sample_rate / fmin)) + 1
    if len(x) < 2 * tau_max:
        raise ValueError(
            f"frame of {len(x)} samples too short for fmin={fmin} Hz (need {2 * tau_max})"
        )
    x = x - x.mean()
    if not np.any(np.abs(x) > 1e-10):
        return F0Estimate(0.0, 0.0)

    d = _difference_function(x, tau_max)
    cum = np.cumsum(d[1:])
    nd = np.ones_like(d)
    taus = np.arange(1, tau_max + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        nd[1:] = np.where(cum > 0, d[1:] * taus / cum, 1.0)

    # A fixed dip threshold fails both ways: a tone dominated by one upper
    # partial dips early at multiples of that partial's period, and in noise
    # nothing dips at all. Measuring against the best dip handles both. Dips
    # are compared at their parabolic minimum, since a period that falls
    # between two lags reads shallower than its integer multiple.
    t = np.arange(max(tau_min, 1), tau_max)
    is_min = (nd[t] <= nd[t - 1]) & (nd[t] <= nd[t + 1])
    dips = t[is_min]
    if len(dips) == 0:
        dips = np.array([tau_min + int(np.argmin(nd[tau_min:tau_max]))])
    a, b, c = nd[dips - 1], nd[dips], nd[dips + 1]
    curv = a - 2.0 * b + c
    with np.errstate(divide="ignore", invalid="ignore"):
        depth = np.where(curv > 0, b - (a - c) ** 2 / (8.0 * curv), b)
    depth = np.maximum(depth, 0.0)
    best = float(depth.min())
    limit = max(DIP_RATIO * best, best + DIP_MARGIN)
    tau = int(dips[np.flatnonzero(depth <= limit)[0]])

    confidence = float(np.clip(1.0 - nd[tau], 0.0, 1.0))
    if confidence < voicing_threshold:
        return F0Estimate(0.0, confidence)
    refined = tau + _parabolic_offset(d[tau - 1], d[tau], d[tau + 1])
    f0 = sample_rate / refined
    if not fmin <= f0 <= fmax:
        return F0Estimate(0.0, confidence)
    return F0Estimate(float(f0), confidence)


def _interpolate_peak(mags: np.ndarray, b: int, spec: Spectrum) -> tuple[float, float]:
    """Frequency from a parabola through log magnitudes; amplitude from the
    peak bin divided by the window response at the interpolated offset."""
    a, m, c = mags[b - 1], mags[b], mags[b + 1]
    if a > 0 and c > 0:
        p = _parabolic_offset(np.log(a), np.log(m), np.log(c))
    else:
        p = _parabolic_offset(a, m, c)
    table = window_kernel_table(spec.window, 2 * (len(mags) - 1))
    gain = np.interp(abs(p), np.linspace(0.0, 0.5, len(table)), table)
    return (b + p) * spec.bin_width, float(m / gain)


def extract_harmonics(
    spec: Spectrum, f0: float, max_h: int = 20, tol: float = 0.03
) -> HarmonicPeaks:
    """Pick the largest local maximum within ``±tol*h*f0`` of each harmonic ``h*f0``.

    The search range always covers the bins either side of ``h*f0``, so low
    harmonics narrower than one bin are still found. Harmonics at or above
    Nyquist are dropped. A missing peak gives amplitude 0 at ``h*f0``.
    """
    if f0 <= 0:
        raise ValueError("extract_harmonics needs a voiced frame (f0 > 0)")
    mags = spec.magnitudes
    df = spec.bin_width
    last = len(mags) - 2
    n_h = min(int(max_h), int(np.ceil(spec.nyquist / f0)) - 1)
    while n_h > 0 and n_h * f0 >= spec.nyquist:
        n_h -= 1
    hs = np.arange(1, n_h + 1)
    freqs = hs * float(f0)
    amps = np.zeros(n_h)
    for i, target in enumerate(freqs):
        lo = max(1, min(int(np.floor(target * (1 - tol) / df)), int(target / df)))
        hi = min(last, max(int(np.ceil(target * (1 + tol) / df)), int(target / df) + 1))
        seg = mags[lo - 1 : hi + 2]
        inner = seg[1:-1]
        is_peak = (inner >= seg[:-2]) & (inner >= seg[2:]) & (inner > 0)
        if not np.any(is_peak):
            continue
        cand = np.flatnonzero(is_peak)
        # Tallest first; a peak whose refined position falls outside the
        # tolerance (a neighbour's sidelobe in the widened range) is skipped.
        for c in cand[np.argsort(-inner[cand], kind="stable")]:
            f, a = _interpolate_peak(mags, lo + int(c), spec)
            if abs(f - target) <= tol * target:
                freqs[i], amps[i] = f, a
                break
    return HarmonicPeaks(float(f0), hs, freqs, amps, int(max_h))


def energy_split(spec: Spectrum, peaks: HarmonicPeaks) -> EnergySplit:
    """Split frame energy into harmonic and residual parts.

    Bin energies are divided by the window's equivalent noise bandwidth so a
    lone sinusoid contributes ``amp**2`` to both the total and harmonic sums.
    """
    total = float(np.sum(spec.magnitudes**2) / spec.enbw)
    harmonic = float(np.sum(np.asarray(peaks.amps) ** 2))
    return EnergySplit(harmonic, max(0.0, total - harmonic), total)
