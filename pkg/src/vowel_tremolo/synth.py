"""Synthetic vowel-tremolo voices with known alternation rate.

A steady harmonic tone whose partial gains cross-fade between the formant
envelopes of two vowels under a raised-cosine modulator. A small pitch
oscillation follows the same modulator, and pink noise can be mixed in as a
stand-in for choir background.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .audio import AudioBuffer

GAIN_FLOOR = 10 ** (-60 / 20)
MAX_HARMONICS = 20
PEAK_LEVEL = 0.9


@dataclass(frozen=True)
class VowelSpec:
    name: str
    formants: tuple  # ((center_hz, bandwidth_hz, gain), ...)

    def __post_init__(self):
        object.__setattr__(self, "formants", tuple(tuple(map(float, f)) for f in self.formants))
        if not self.formants:
            raise ValueError(f"vowel {self.name!r}: formants must not be empty")
        for c, bw, g in self.formants:
            if c <= 0 or bw <= 0 or g <= 0:
                raise ValueError(f"vowel {self.name!r}: formants need positive center, bandwidth and gain")

    def check_nyquist(self, sample_rate: int) -> None:
        for c, _, _ in self.formants:
            if c >= sample_rate / 2:
                raise ValueError(f"vowel {self.name!r}: formant {c} Hz above Nyquist")


# Design values after Peterson & Barney; not measured from any recording.
VOWELS = {
    "i": VowelSpec("i", ((270, 60, 1.0), (2290, 90, 0.3))),
    "e": VowelSpec("e", ((530, 70, 1.0), (1840, 100, 0.35))),
    "o": VowelSpec("o", ((570, 80, 1.0), (840, 80, 0.5))),
}


def _vowel(v) -> VowelSpec:
    if isinstance(v, VowelSpec):
        return v
    if isinstance(v, str):
        try:
            return VOWELS[v]
        except KeyError:
            raise ValueError(f"unknown vowel {v!r}; known: {sorted(VOWELS)}") from None
    if isinstance(v, dict):
        return VowelSpec(v.get("name", "custom"), tuple(v["formants"]))
    raise TypeError(f"cannot interpret {v!r} as a vowel")


@dataclass(frozen=True)
class TremoloSpec:
    f0: float
    vowel_a: VowelSpec = VOWELS["i"]
    vowel_b: VowelSpec = VOWELS["e"]
    rate_hz: float = 5.0
    duration_s: float = 4.0
    background_db: float = -math.inf
    pitch_wobble_cents: float = 20.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "vowel_a", _vowel(self.vowel_a))
        object.__setattr__(self, "vowel_b", _vowel(self.vowel_b))
        if self.background_db is None:
            object.__setattr__(self, "background_db", -math.inf)

    def validate(self, sample_rate: int, hop_size: int = 512) -> None:
        feature_rate = sample_rate / hop_size
        if not self.f0 > 0:
            raise ValueError("f0: must be positive")
        if not 0 < self.rate_hz < feature_rate / 4:
            raise ValueError(f"rate_hz: must lie in (0, {feature_rate / 4:g})")
        if not self.duration_s > 4 / self.rate_hz:
            raise ValueError(f"duration_s: must exceed 4 / rate_hz = {4 / self.rate_hz:g}")
        if self.f0 >= sample_rate / 2:
            raise ValueError("f0: must be below Nyquist")
        if math.isnan(self.background_db) or self.background_db == math.inf:
            raise ValueError("background_db: must be finite or -inf")
        if self.pitch_wobble_cents < 0:
            raise ValueError("pitch_wobble_cents: must be non-negative")
        self.vowel_a.check_nyquist(sample_rate)
        self.vowel_b.check_nyquist(sample_rate)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["background_db"] = None if self.background_db == -math.inf else self.background_db
        for key in ("vowel_a", "vowel_b"):
            d[key] = {"name": d[key]["name"], "formants": [list(f) for f in d[key]["formants"]]}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TremoloSpec":
        known = {"f0", "vowel_a", "vowel_b", "rate_hz", "duration_s", "background_db",
                 "pitch_wobble_cents", "seed"}
        unknown = set(d) - known - {"sample_rate"}
        if unknown:
            raise ValueError(f"{sorted(unknown)[0]}: unknown field")
        if "f0" not in d:
            raise ValueError("f0: required field missing")
        kwargs = {k: v for k, v in d.items() if k in known}
        return cls(**kwargs)


def formant_gain(h, f0: float, vowel: VowelSpec):
    """Sum of Lorentzian resonances at ``h * f0``, floored at -60 dB."""
    freq = np.asarray(h, dtype=np.float64) * f0
    g = np.zeros_like(freq)
    for center, bw, gain in vowel.formants:
        g = g + gain / (1.0 + ((freq - center) / (bw / 2.0)) ** 2)
    g = np.maximum(g, GAIN_FLOOR)
    return g if g.ndim else float(g)


def modulator(t, rate_hz: float) -> np.ndarray:
    """Raised cosine in [0, 1]: 0 on vowel A, 1 on vowel B."""
    return 0.5 * (1.0 - np.cos(2 * np.pi * rate_hz * np.asarray(t)))


BACKGROUND_BAND = (80.0, 8000.0)


def pink_noise(n: int, rng: np.random.Generator, sample_rate: int = 44100,
               band=BACKGROUND_BAND) -> np.ndarray:
    """Unit-RMS 1/f noise restricted to ``band`` (Hz), roughly the voice range.

    Unrestricted pink noise puts a large share of its energy below 20 Hz,
    which would show up as slow level drift rather than audible background.
    """
    spectrum = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / sample_rate)
    inside = (f >= band[0]) & (f <= band[1])
    shaped = np.where(inside, spectrum / np.sqrt(np.maximum(f, 1e-12)), 0.0)
    x = np.fft.irfft(shaped, n)
    return x / np.sqrt(np.mean(x**2))


def synthesize_tremolo(spec: TremoloSpec, sample_rate: int = 44100) -> AudioBuffer:
    spec.validate(sample_rate)
    n = int(round(spec.duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    m = modulator(t, spec.rate_hz)
    # Vowel A sits higher in pitch: +wobble at m = 0, -wobble at m = 1.
    cents = spec.pitch_wobble_cents * (1.0 - 2.0 * m)
    f_inst = spec.f0 * 2.0 ** (cents / 1200.0)
    phase = 2 * np.pi * np.cumsum(f_inst) / sample_rate
    f_top = spec.f0 * 2.0 ** (spec.pitch_wobble_cents / 1200.0)
    n_h = min(MAX_HARMONICS, int(np.floor((sample_rate / 2) / f_top)))
    if n_h < 1:
        raise ValueError("f0: no harmonic fits below Nyquist")

    voice = np.zeros(n)
    for h in range(1, n_h + 1):
        ga = formant_gain(h, f_inst, spec.vowel_a)
        gb = formant_gain(h, f_inst, spec.vowel_b)
        voice += ((1.0 - m) * ga + m * gb) * np.sin(h * phase)

    out = voice
    if spec.background_db > -math.inf:
        rng = np.random.default_rng(spec.seed)
        rms = np.sqrt(np.mean(voice**2))
        out = voice + pink_noise(n, rng, sample_rate) * rms * 10 ** (spec.background_db / 20)
    peak = np.max(np.abs(out))
    if peak > 0:
        out = out * (PEAK_LEVEL / peak)
    return AudioBuffer(out, sample_rate)


def write_sidecar(path, spec: TremoloSpec, sample_rate: int, source: dict | None = None) -> dict:
    """Write the ground-truth JSON next to a synthesized file and return it.

    With ``source`` the sidecar is that input spec plus the seed actually
    used; otherwise it is the full resolved spec and sample rate.
    """
    if source is not None:
        data = dict(source)
    else:
        data = spec.to_dict()
        data["sample_rate"] = sample_rate
    data["seed"] = spec.seed
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return data
