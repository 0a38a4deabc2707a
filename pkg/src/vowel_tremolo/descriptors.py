"""The 52 per-frame low-level descriptors and the feature-matrix container.

Three representations feed the shape descriptors (moments, slope, decrease,
rolloff, variation):

* spectral: linear bin magnitudes at bin frequencies,
* harmonic: partial amplitudes ``a(h)`` at the measured partial frequencies,
* perceptual: specific loudness ``N'(z)`` at the 24 Bark-band centres.

Tristimulus, odd/even ratio and deviation are shared by the harmonic and
perceptual families; for the latter the Bark bands play the role of partials.

Columns whose values depend on the harmonic model or on the perceptual
representation are held at the last voiced frame's values when a frame is
unvoiced (``AnalysisConfig.hold_unvoiced``); before the first voiced frame
they read 0. ``FundamentalFrequency`` reads 0 on unvoiced frames and
``HarmonicEnergy`` is 0 there, so ``NoiseEnergy`` equals the frame energy.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ._validation import check_weights
from .audio import AudioBuffer, Spectrum, frame_signal, spectrum_of_frame
from .config import AnalysisConfig
from .pitch import HarmonicPeaks, energy_split, estimate_f0, extract_harmonics

FEATURE_NAMES: tuple[str, ...] = (
    "HarmonicSpectralRolloff",
    "HarmonicSpectralSlope",
    "HarmonicSpectralDecrease",
    "HarmonicSpectralVariation",
    "HarmonicSpectralKurtosis",
    "HarmonicSpectralSkewness",
    "HarmonicSpectralSpread",
    "HarmonicSpectralCentroid",
    "HarmonicSpectralDeviation",
    "HarmonicTristimulus1",
    "HarmonicTristimulus2",
    "HarmonicTristimulus3",
    "HarmonicOddToEvenRatio",
    "Inharmonicity",
    "NoiseEnergy",
    "HarmonicEnergy",
    "SpectralFlatness1",
    "SpectralFlatness2",
    "SpectralFlatness3",
    "SpectralFlatness4",
    "FundamentalFrequency",
    "PerceptualSpectralSlope",
    "SpectralCrest1",
    "SpectralCrest2",
    "SpectralCrest3",
    "SpectralCrest4",
    "PerceptualSpectralVariation",
    "PerceptualSpectralRolloff",
    "PerceptualSpectralSkewness",
    "PerceptualSpectralDecrease",
    "PerceptualSpectralCentroid",
    "PerceptualSpectralKurtosis",
    "PerceptualOddToEvenRatio",
    "PerceptualSpectralSpread",
    "Sharpness",
    "PerceptualTristimulus1",
    "PerceptualTristimulus2",
    "PerceptualTristimulus3",
    "Spread",
    "PerceptualSpectralDeviation",
    "Loudness",
    "SpectralRolloff",
    "SpectralDecrease",
    "SpectralSlope",
    "SpectralSkewness",
    "SpectralVariation",
    "SpectralSpread",
    "SpectralKurtosis",
    "TotalEnergy",
    "SpectralCentroid",
    "SignalZeroCrossingRate",
    "Noisiness",
)
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}

HELD_WHEN_UNVOICED = frozenset(
    n
    for n in FEATURE_NAMES
    if (n.startswith("Harmonic") and n != "HarmonicEnergy")
    or n.startswith("Perceptual")
    or n == "Inharmonicity"
)

# Zwicker critical-band edges (Hz) for 24 Bark bands.
BARK_EDGES = np.array(
    [0, 100, 200, 300, 400, 510, 630, 770, 920, 1080, 1270, 1480, 1720,
     2000, 2320, 2700, 3150, 3700, 4400, 5300, 6400, 7700, 9500, 12000, 15500],
    dtype=float,
)
BARK_CENTERS = 0.5 * (BARK_EDGES[:-1] + BARK_EDGES[1:])
ROLLOFF_FRACTION = 0.95
ODD_EVEN_CAP = 1000.0


def check_feature_name(name: str) -> str:
    if name not in FEATURE_INDEX:
        raise KeyError(
            f"unknown feature {name!r}; canonical names are: {', '.join(FEATURE_NAMES)}"
        )
    return name


class Moments(NamedTuple):
    centroid: float
    spread: float
    skewness: float
    kurtosis: float
    degenerate: bool = False


class EnvelopeStats(NamedTuple):
    slope: float
    decrease: float
    rolloff: float
    variation: float
    degenerate: bool = False


class HarmonicFeatures(NamedTuple):
    tristimulus: tuple
    odd_even_ratio: float
    deviation: float
    inharmonicity: float
    degenerate: bool = False


class PerceptualFeatures(NamedTuple):
    loudness: float
    specific_loudness: np.ndarray
    sharpness: float
    spread: float


def shape_moments(weights, positions) -> Moments:
    """Centroid, spread, skewness and kurtosis of ``weights`` as a distribution over ``positions``."""
    w, x = check_weights(weights, positions)
    total = w.sum()
    if total <= 0:
        return Moments(0.0, 0.0, 0.0, 3.0, True)
    p = w / total
    mu = float(p @ x)
    dev = x - mu
    var = float(p @ dev**2)
    sigma = np.sqrt(var)
    if sigma == 0.0:
        return Moments(mu, 0.0, 0.0, 3.0)
    skew = float(p @ dev**3) / sigma**3
    kurt = float(p @ dev**4) / sigma**4
    return Moments(mu, float(sigma), skew, kurt)


def envelope_stats(weights, positions, prev_weights=None) -> EnvelopeStats:
    """Slope, decrease, rolloff and variation of a magnitude envelope.

    The slope is the least-squares slope of the sum-normalised weights
    against position, so it does not change with signal gain. Variation
    compares against ``prev_weights`` zero-padded to equal length; without a
    previous frame it is 0.
    """
    w, x = check_weights(weights, positions)
    total = w.sum()
    if total <= 0:
        return EnvelopeStats(0.0, 0.0, 0.0, 0.0, True)

    p = w / total
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (p - p.mean())) / sxx if sxx > 0 else 0.0

    tail = w[1:].sum()
    if tail > 0:
        decrease = float(np.sum((w[1:] - w[0]) / np.arange(1, len(w)))) / tail
    else:
        decrease = 0.0

    cum = np.cumsum(w**2)
    rolloff = float(x[np.searchsorted(cum, ROLLOFF_FRACTION * cum[-1])])

    variation = 0.0
    if prev_weights is not None:
        prev = np.asarray(prev_weights, dtype=np.float64)
        n = max(len(prev), len(w))
        cur = np.pad(w, (0, n - len(w)))
        prev = np.pad(prev, (0, n - len(prev)))
        norm = np.sqrt(float(cur @ cur) * float(prev @ prev))
        if norm > 0:
            variation = 1.0 - float(cur @ prev) / norm
    return EnvelopeStats(slope, decrease, rolloff, variation)


def band_flatness_crest(spec: Spectrum, band_edges=(250.0, 500.0, 1000.0, 2000.0, 4000.0)):
    """Per-band flatness (geometric/arithmetic mean) and crest (max/mean) of bin powers.

    Bands are half-open ``[lo, hi)``. An empty or silent band reads 1 for both.
    """
    power = spec.power
    freqs = spec.bin_freqs
    flat, crest = [], []
    for lo, hi in zip(band_edges[:-1], band_edges[1:]):
        band = power[(freqs >= lo) & (freqs < hi)]
        mean = band.mean() if band.size else 0.0
        if mean <= 0:
            flat.append(1.0)
            crest.append(1.0)
            continue
        if np.any(band <= 0):
            geo = 0.0
        else:
            geo = float(np.exp(np.mean(np.log(band))))
        flat.append(min(1.0, geo / mean))
        crest.append(max(1.0, float(band.max() / mean)))
    return np.array(flat), np.array(crest)


def tristimulus(amps, power: int = 1) -> np.ndarray:
    """``(T1, T2, T3)``: shares of ``a(1)``, ``a(2..4)`` and ``a(5..)`` in ``sum a(h)``."""
    a = np.asarray(amps, dtype=np.float64) ** power
    total = a.sum()
    if total <= 0:
        return np.zeros(3)
    t1 = a[:1].sum() / total
    t2 = a[1:4].sum() / total
    t3 = a[4:].sum() / total
    return np.array([t1, t2, t3])


def odd_even_ratio(amps) -> float:
    a2 = np.asarray(amps, dtype=np.float64) ** 2
    odd, even = a2[0::2].sum(), a2[1::2].sum()
    if odd == 0:
        return 0.0
    if even == 0 or odd / even > ODD_EVEN_CAP:
        return ODD_EVEN_CAP
    return float(odd / even)


def spectral_deviation(amps) -> float:
    """Mean absolute distance of ``a(h)`` from its 3-point moving average.

    End points average over the neighbours that exist.
    """
    a = np.asarray(amps, dtype=np.float64)
    if len(a) < 2:
        return 0.0
    padded = np.concatenate(([0.0], a, [0.0]))
    counts = np.full(len(a), 3.0)
    counts[0] = counts[-1] = 2.0
    env = (padded[:-2] + padded[1:-1] + padded[2:]) / counts
    return float(np.mean(np.abs(a - env)))


def harmonic_features(peaks: HarmonicPeaks, tristimulus_power: int = 1) -> HarmonicFeatures:
    a = np.asarray(peaks.amps, dtype=np.float64)
    if a.size == 0 or not np.any(a > 0):
        return HarmonicFeatures((0.0, 0.0, 0.0), 0.0, 0.0, 0.0, True)
    a2 = a**2
    ideal = peaks.harmonics * peaks.f0
    inharm = 2.0 / peaks.f0 * float(np.abs(peaks.freqs - ideal) @ a2) / a2.sum()
    return HarmonicFeatures(
        tuple(tristimulus(a, tristimulus_power)),
        odd_even_ratio(a),
        spectral_deviation(a),
        inharm,
    )


@lru_cache(maxsize=16)
def _bark_band_index(n_bins: int, bin_width: float) -> np.ndarray:
    freqs = np.arange(n_bins) * bin_width
    idx = np.searchsorted(BARK_EDGES, freqs, side="right") - 1
    idx[freqs >= BARK_EDGES[-1]] = -1
    return idx


def bark_energies(spec: Spectrum) -> np.ndarray:
    idx = _bark_band_index(len(spec.magnitudes), spec.bin_width)
    keep = idx >= 0
    return np.bincount(idx[keep], weights=spec.power[keep], minlength=24)


def sharpness_weighting(z: np.ndarray) -> np.ndarray:
    return np.where(z <= 15, 1.0, 0.066 * np.exp(0.171 * z))


def perceptual_features(spec: Spectrum, loudness_exponent: float = 0.23) -> PerceptualFeatures:
    """Loudness, specific loudness per Bark band, sharpness and perceptual spread."""
    specific = bark_energies(spec) ** loudness_exponent
    loudness = float(specific.sum())
    if loudness <= 0:
        return PerceptualFeatures(0.0, specific, 0.0, 0.0)
    z = np.arange(1, 25)
    sharp = 0.11 * float(np.sum(z * sharpness_weighting(z) * specific)) / loudness
    spread = (loudness - float(specific.max())) / loudness
    return PerceptualFeatures(loudness, specific, sharp, spread)


def temporal_features(frame, sample_rate: int) -> tuple[float, float]:
    """``(zero-crossing rate in Hz, mean squared sample)`` of the raw frame."""
    x = np.asarray(frame, dtype=np.float64)
    s = np.sign(x)
    nz = s[s != 0]
    crossings = int(np.count_nonzero(nz[1:] != nz[:-1]))
    return crossings * sample_rate / len(x), float(np.mean(x**2))


@dataclass
class FeatureMatrix:
    """Frames x 52 descriptor trajectories for one source file."""

    values: np.ndarray
    timestamps: np.ndarray
    feature_rate: float
    names: tuple = FEATURE_NAMES
    source_id: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        self.names = tuple(self.names)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise ValueError(
                f"values shape {self.values.shape} does not match {len(self.names)} names"
            )
        if len(self.timestamps) != len(self.values):
            raise ValueError("one timestamp per row required")
        if len(set(self.names)) != len(self.names):
            raise ValueError("column names must be unique")

    @property
    def n_frames(self) -> int:
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.names.index(name)]
        except ValueError:
            raise KeyError(
                f"unknown feature {name!r}; canonical names are: {', '.join(self.names)}"
            ) from None

    def with_values(self, values) -> "FeatureMatrix":
        return FeatureMatrix(values, self.timestamps, self.feature_rate, self.names, self.source_id)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("time_s",) + self.names)
            for t, row in zip(self.timestamps, self.values):
                writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, source_id: str | None = None) -> "FeatureMatrix":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][0] != "time_s":
            raise ValueError(f"{path}: not a feature CSV (first header must be time_s)")
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
        data = data.reshape(-1, len(rows[0]))
        times = data[:, 0]
        rate = 1.0 / np.median(np.diff(times)) if len(times) > 1 else 1.0
        return cls(data[:, 1:], times, float(rate), tuple(rows[0][1:]),
                   source_id if source_id is not None else Path(path).stem)


def frame_descriptors(
    frame,
    spec: Spectrum,
    peaks: HarmonicPeaks | None,
    prev_spec_mags,
    prev_harm_amps,
    prev_specific,
    cfg: AnalysisConfig,
    sample_rate: int,
) -> dict:
    """Descriptor values of one frame, keyed by canonical name.

    ``peaks`` is ``None`` for an unvoiced frame, in which case the harmonic
    entries are omitted. The Bark specific-loudness vector rides along under
    ``"_specific_loudness"`` for the next frame's variation.
    """
    out = {}
    freqs, mags = spec.bin_freqs, spec.magnitudes

    m = shape_moments(mags, freqs)
    e = envelope_stats(mags, freqs, prev_spec_mags)
    out.update(
        SpectralCentroid=m.centroid, SpectralSpread=m.spread,
        SpectralSkewness=m.skewness, SpectralKurtosis=m.kurtosis,
        SpectralSlope=e.slope, SpectralDecrease=e.decrease,
        SpectralRolloff=e.rolloff, SpectralVariation=e.variation,
    )
    flat, crest = band_flatness_crest(spec, cfg.band_edges)
    for i, (f, c) in enumerate(zip(flat, crest), start=1):
        out[f"SpectralFlatness{i}"] = float(f)
        out[f"SpectralCrest{i}"] = float(c)

    perc = perceptual_features(spec, cfg.loudness_exponent)
    nz = perc.specific_loudness
    m = shape_moments(nz, BARK_CENTERS)
    e = envelope_stats(nz, BARK_CENTERS, prev_specific)
    t = tristimulus(nz, cfg.tristimulus_power)
    out.update(
        Loudness=perc.loudness, Sharpness=perc.sharpness, Spread=perc.spread,
        PerceptualSpectralCentroid=m.centroid, PerceptualSpectralSpread=m.spread,
        PerceptualSpectralSkewness=m.skewness, PerceptualSpectralKurtosis=m.kurtosis,
        PerceptualSpectralSlope=e.slope, PerceptualSpectralDecrease=e.decrease,
        PerceptualSpectralRolloff=e.rolloff, PerceptualSpectralVariation=e.variation,
        PerceptualTristimulus1=t[0], PerceptualTristimulus2=t[1], PerceptualTristimulus3=t[2],
        PerceptualOddToEvenRatio=odd_even_ratio(nz),
        PerceptualSpectralDeviation=spectral_deviation(nz),
        _specific_loudness=nz,
    )

    zcr, energy = temporal_features(frame, sample_rate)
    out.update(SignalZeroCrossingRate=zcr, TotalEnergy=energy)

    split = energy_split(spec, peaks if peaks is not None else HarmonicPeaks.empty())
    out.update(
        HarmonicEnergy=split.harmonic_energy,
        NoiseEnergy=split.noise_energy,
        Noisiness=split.noise_energy / split.total_energy if split.total_energy > 0 else 0.0,
        FundamentalFrequency=peaks.f0 if peaks is not None else 0.0,
    )
    if peaks is not None:
        a = peaks.amps
        m = shape_moments(a, peaks.freqs)
        e = envelope_stats(a, peaks.freqs, prev_harm_amps)
        h = harmonic_features(peaks, cfg.tristimulus_power)
        out.update(
            HarmonicSpectralCentroid=m.centroid, HarmonicSpectralSpread=m.spread,
            HarmonicSpectralSkewness=m.skewness, HarmonicSpectralKurtosis=m.kurtosis,
            HarmonicSpectralSlope=e.slope, HarmonicSpectralDecrease=e.decrease,
            HarmonicSpectralRolloff=e.rolloff, HarmonicSpectralVariation=e.variation,
            HarmonicSpectralDeviation=h.deviation,
            HarmonicTristimulus1=h.tristimulus[0], HarmonicTristimulus2=h.tristimulus[1],
            HarmonicTristimulus3=h.tristimulus[2],
            HarmonicOddToEvenRatio=h.odd_even_ratio, Inharmonicity=h.inharmonicity,
        )
    return out


def compute_feature_matrix(
    buf: AudioBuffer, cfg: AnalysisConfig | None = None, source_id: str = ""
) -> FeatureMatrix:
    """Frame ``buf`` and compute all 52 descriptors per frame."""
    cfg = cfg or AnalysisConfig()
    frames = frame_signal(buf, cfg.frame_size, cfg.hop_size)
    sr = buf.sample_rate
    times = frames.timestamps
    values = np.zeros((len(frames), len(FEATURE_NAMES)))
    held = np.zeros(len(FEATURE_NAMES))
    held_mask = np.array([n in HELD_WHEN_UNVOICED for n in FEATURE_NAMES])
    prev_mags = prev_amps = prev_specific = None

    for i, frame in enumerate(frames.frames):
        spec = spectrum_of_frame(frame, cfg.window, sr, float(times[i]))
        est = estimate_f0(frame, sr, cfg.fmin, cfg.fmax, cfg.voicing_threshold)
        peaks = None
        if est.voiced:
            peaks = extract_harmonics(spec, est.f0, cfg.max_h, cfg.harmonic_tol)
            if not np.any(peaks.amps > 0):
                peaks = None
        d = frame_descriptors(frame, spec, peaks, prev_mags, prev_amps, prev_specific, cfg, sr)
        row = np.array([d.get(n, 0.0) for n in FEATURE_NAMES])
        if peaks is not None:
            held = row.copy()
            prev_amps = peaks.amps
            prev_specific = d["_specific_loudness"]
        elif cfg.hold_unvoiced:
            row[held_mask] = held[held_mask]
        else:
            prev_specific = d["_specific_loudness"]
        values[i] = row
        prev_mags = spec.magnitudes

    return FeatureMatrix(values, times, sr / cfg.hop_size, FEATURE_NAMES, source_id)
