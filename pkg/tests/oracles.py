"""Slow, independent reference implementations used only by the tests.

Nothing here imports the package's numerical code. Each routine is written
the obvious way (explicit sums and loops) so it can be read against the
definitions rather than against the optimised implementation.
"""

from __future__ import annotations

import math

import numpy as np

BARK_EDGES = [0, 100, 200, 300, 400, 510, 630, 770, 920, 1080, 1270, 1480, 1720,
              2000, 2320, 2700, 3150, 3700, 4400, 5300, 6400, 7700, 9500, 12000, 15500]


# --------------------------------------------------------------------- spectra

def window(name: str, n: int) -> np.ndarray:
    k = np.arange(n)
    if name == "rectangular":
        return np.ones(n)
    if name == "hann":
        return 0.5 - 0.5 * np.cos(2 * np.pi * k / n)
    if name == "hamming":
        return 0.54 - 0.46 * np.cos(2 * np.pi * k / n)
    raise ValueError(name)


def dft_magnitudes(frame, win: str = "hann") -> np.ndarray:
    """|X_k| of the windowed frame by direct summation, peak-normalised.

    Interior bins scale by ``2 / sum(w)``; DC and Nyquist additionally by
    ``1 / sqrt(2)``.
    """
    x = np.asarray(frame, dtype=np.float64)
    n = len(x)
    w = window(win, n)
    xw = x * w
    idx = np.arange(n)
    out = np.empty(n // 2 + 1)
    for k in range(n // 2 + 1):
        ang = 2 * np.pi * k * idx / n
        re = float(np.sum(xw * np.cos(ang)))
        im = -float(np.sum(xw * np.sin(ang)))
        out[k] = math.hypot(re, im) * 2.0 / float(np.sum(w))
    out[0] /= math.sqrt(2)
    out[-1] /= math.sqrt(2)
    return out


def enbw(win: str, n: int) -> float:
    w = window(win, n)
    return n * float(np.sum(w * w)) / float(np.sum(w)) ** 2


# ----------------------------------------------------------------------- pitch

def exhaustive_lag_f0(frame, sample_rate: int, fmin: float, fmax: float) -> float:
    """Period = the lag (integer, then parabola-refined) minimising the
    mean squared difference between the frame and its shifted copy, with
    ties towards the shortest lag among near-equal minima."""
    x = np.asarray(frame, dtype=np.float64)
    x = x - x.mean()
    lo = int(math.floor(sample_rate / fmax))
    hi = int(math.ceil(sample_rate / fmin))
    w = len(x) - hi - 1
    d = np.zeros(hi + 2)
    for tau in range(1, hi + 2):
        d[tau] = float(np.sum((x[:w] - x[tau:tau + w]) ** 2)) / w
    search = list(range(max(lo, 2), hi + 1))
    best = min(d[t] for t in search)
    scale = float(np.mean(x[:w] ** 2))
    tau = next(t for t in search if d[t] <= best + 0.05 * scale
               and d[t] <= d[t - 1] and d[t] <= d[t + 1])
    a, b, c = d[tau - 1], d[tau], d[tau + 1]
    den = a - 2 * b + c
    off = 0.5 * (a - c) / den if den != 0 else 0.0
    return sample_rate / (tau + off)


# ----------------------------------------------------------------- descriptors

def moments(w, x):
    total = sum(w)
    if total <= 0:
        return 0.0, 0.0, 0.0, 3.0
    mu = sum(wi * xi for wi, xi in zip(w, x)) / total
    m2 = sum(wi * (xi - mu) ** 2 for wi, xi in zip(w, x)) / total
    if m2 == 0:
        return mu, 0.0, 0.0, 3.0
    m3 = sum(wi * (xi - mu) ** 3 for wi, xi in zip(w, x)) / total
    m4 = sum(wi * (xi - mu) ** 4 for wi, xi in zip(w, x)) / total
    s = math.sqrt(m2)
    return mu, s, m3 / s**3, m4 / m2**2


def envelope(w, x, prev=None):
    n = len(w)
    total = sum(w)
    if total <= 0:
        return 0.0, 0.0, 0.0, 0.0
    p = [wi / total for wi in w]
    xm = sum(x) / n
    pm = sum(p) / n
    num = sum((xi - xm) * (pi - pm) for xi, pi in zip(x, p))
    den = sum((xi - xm) ** 2 for xi in x)
    slope = num / den if den > 0 else 0.0
    tail = sum(w[1:])
    dec = sum((w[b] - w[0]) / b for b in range(1, n)) / tail if tail > 0 else 0.0
    energy = sum(wi * wi for wi in w)
    acc = 0.0
    roll = x[-1]
    for wi, xi in zip(w, x):
        acc += wi * wi
        if acc >= 0.95 * energy:
            roll = xi
            break
    var = 0.0
    if prev is not None:
        m = max(len(prev), n)
        a = list(w) + [0.0] * (m - n)
        b = list(prev) + [0.0] * (m - len(prev))
        na = math.sqrt(sum(v * v for v in a))
        nb = math.sqrt(sum(v * v for v in b))
        if na * nb > 0:
            var = 1.0 - sum(u * v for u, v in zip(a, b)) / (na * nb)
    return slope, dec, roll, var


def tristim(a):
    s = sum(a)
    if s <= 0:
        return 0.0, 0.0, 0.0
    return a[0] / s, sum(a[1:4]) / s, sum(a[4:]) / s


def odd_even(a, cap=1000.0):
    odd = sum(a[i] ** 2 for i in range(0, len(a), 2))
    even = sum(a[i] ** 2 for i in range(1, len(a), 2))
    if odd == 0:
        return 0.0
    if even == 0 or odd / even > cap:
        return cap
    return odd / even


def deviation(a):
    n = len(a)
    if n < 2:
        return 0.0
    total = 0.0
    for h in range(n):
        nb = [a[j] for j in (h - 1, h, h + 1) if 0 <= j < n]
        total += abs(a[h] - sum(nb) / len(nb))
    return total / n


def bark_specific(mags, bin_width, exponent=0.23):
    e = [0.0] * 24
    for b, m in enumerate(mags):
        f = b * bin_width
        for z in range(24):
            if BARK_EDGES[z] <= f < BARK_EDGES[z + 1]:
                e[z] += m * m
                break
    return [v ** exponent for v in e]


def flat_crest(mags, bin_width, edges=(250, 500, 1000, 2000, 4000)):
    flats, crests = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        band = [m * m for b, m in enumerate(mags) if lo <= b * bin_width < hi]
        mean = sum(band) / len(band) if band else 0.0
        if mean <= 0:
            flats.append(1.0)
            crests.append(1.0)
            continue
        if min(band) <= 0:
            geo = 0.0
        else:
            geo = math.exp(sum(math.log(v) for v in band) / len(band))
        flats.append(min(1.0, geo / mean))
        crests.append(max(1.0, max(band) / mean))
    return flats, crests


def frame_reference(frame, sample_rate, peaks, prev_mags=None, prev_amps=None,
                    prev_specific=None, win="hann"):
    """All 52 descriptors of one frame. ``peaks`` is ``(f0, freqs, amps)`` or None."""
    x = [float(v) for v in frame]
    n = len(x)
    mags = list(dft_magnitudes(frame, win))
    bw = sample_rate / n
    freqs = [b * bw for b in range(len(mags))]
    out = {}
    c, s, sk, ku = moments(mags, freqs)
    sl, de, ro, va = envelope(mags, freqs, prev_mags)
    out.update(SpectralCentroid=c, SpectralSpread=s, SpectralSkewness=sk, SpectralKurtosis=ku,
               SpectralSlope=sl, SpectralDecrease=de, SpectralRolloff=ro, SpectralVariation=va)
    fl, cr = flat_crest(mags, bw)
    for i in range(4):
        out[f"SpectralFlatness{i + 1}"] = fl[i]
        out[f"SpectralCrest{i + 1}"] = cr[i]

    nz = bark_specific(mags, bw)
    centers = [0.5 * (BARK_EDGES[z] + BARK_EDGES[z + 1]) for z in range(24)]
    loud = sum(nz)
    if loud > 0:
        g = [1.0 if z <= 15 else 0.066 * math.exp(0.171 * z) for z in range(1, 25)]
        sharp = 0.11 * sum((z + 1) * g[z] * nz[z] for z in range(24)) / loud
        spread = (loud - max(nz)) / loud
    else:
        sharp = spread = 0.0
    c, s, sk, ku = moments(nz, centers)
    sl, de, ro, va = envelope(nz, centers, prev_specific)
    t = tristim(nz)
    out.update(Loudness=loud, Sharpness=sharp, Spread=spread,
               PerceptualSpectralCentroid=c, PerceptualSpectralSpread=s,
               PerceptualSpectralSkewness=sk, PerceptualSpectralKurtosis=ku,
               PerceptualSpectralSlope=sl, PerceptualSpectralDecrease=de,
               PerceptualSpectralRolloff=ro, PerceptualSpectralVariation=va,
               PerceptualTristimulus1=t[0], PerceptualTristimulus2=t[1],
               PerceptualTristimulus3=t[2], PerceptualOddToEvenRatio=odd_even(nz),
               PerceptualSpectralDeviation=deviation(nz))

    signs = [1 if v > 0 else -1 for v in x if v != 0]
    crossings = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    out["SignalZeroCrossingRate"] = crossings * sample_rate / n
    out["TotalEnergy"] = sum(v * v for v in x) / n

    total = sum(m * m for m in mags) / enbw(win, n)
    if peaks is None:
        harm = 0.0
    else:
        harm = sum(a * a for a in peaks[2])
    noise = max(0.0, total - harm)
    out.update(HarmonicEnergy=harm, NoiseEnergy=noise,
               Noisiness=noise / total if total > 0 else 0.0,
               FundamentalFrequency=peaks[0] if peaks is not None else 0.0)
    if peaks is not None:
        f0, pf, a = peaks[0], list(peaks[1]), list(peaks[2])
        c, s, sk, ku = moments(a, pf)
        sl, de, ro, va = envelope(a, pf, prev_amps)
        t = tristim(a)
        a2 = sum(v * v for v in a)
        inh = 2.0 / f0 * sum(abs(fh - (h + 1) * f0) * ah * ah
                             for h, (fh, ah) in enumerate(zip(pf, a))) / a2
        out.update(HarmonicSpectralCentroid=c, HarmonicSpectralSpread=s,
                   HarmonicSpectralSkewness=sk, HarmonicSpectralKurtosis=ku,
                   HarmonicSpectralSlope=sl, HarmonicSpectralDecrease=de,
                   HarmonicSpectralRolloff=ro, HarmonicSpectralVariation=va,
                   HarmonicSpectralDeviation=deviation(a),
                   HarmonicTristimulus1=t[0], HarmonicTristimulus2=t[1],
                   HarmonicTristimulus3=t[2], HarmonicOddToEvenRatio=odd_even(a),
                   Inharmonicity=inh)
    return out, mags, nz


# ----------------------------------------------------------------- eigensolver

def jacobi_eigh(a, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic Jacobi rotations on a symmetric matrix.

    Returns eigenvalues in descending order and the matching unit
    eigenvectors as columns.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < tol * max(1.0, float(np.abs(a).max())):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k, p], a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p, k], a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = v[k, p], v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    vals = np.diag(a).copy()
    order = sorted(range(n), key=lambda i: -vals[i])
    return vals[order], v[:, order]
