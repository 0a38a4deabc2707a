"""Flat analysis configuration shared by the library entry points and the CLI."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

ENERGY_FEATURES = ("HarmonicEnergy", "Loudness", "TotalEnergy")


@dataclass(frozen=True)
class AnalysisConfig:
    # framing / spectrum
    frame_size: int = 2048
    hop_size: int = 512
    window: str = "hann"
    # pitch and partials
    fmin: float = 70.0
    fmax: float = 1200.0
    voicing_threshold: float = 0.5
    max_h: int = 20
    harmonic_tol: float = 0.03
    hold_unvoiced: bool = True
    # descriptor constants
    band_edges: tuple = (250.0, 500.0, 1000.0, 2000.0, 4000.0)
    loudness_exponent: float = 0.23
    tristimulus_power: int = 1
    # smoothing / selection
    smoothing_cutoff_hz: float = 15.0
    smoothing_order: int = 2
    energy_blocklist: tuple = ENERGY_FEATURES
    # event detection
    start_trim_s: float = 0.25
    end_trim_s: float = 0.25
    rms_floor: float = 0.0
    # cutoff = factor * dominant modulation rate; 0 disables
    detection_smoothing_factor: float = 2.0
    threshold_mode: str = "adaptive"
    threshold: float = 0.1
    k: float = 1.0
    threshold_window_s: float = 1.0
    min_spacing_s: float = 0.06
    selected_feature: str = "auto"

    def __post_init__(self):
        for name in ("band_edges", "energy_blocklist"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.window not in ("hann", "hamming", "rectangular"):
            raise ValueError(f"window: unknown window {self.window!r}")
        if self.hop_size > self.frame_size or self.hop_size < 1:
            raise ValueError("hop_size: must satisfy 1 <= hop_size <= frame_size")
        if not 0 < self.fmin < self.fmax:
            raise ValueError("fmin/fmax: require 0 < fmin < fmax")
        if self.threshold_mode not in ("fixed", "adaptive"):
            raise ValueError(f"threshold_mode: expected 'fixed' or 'adaptive', got {self.threshold_mode!r}")
        if self.tristimulus_power not in (1, 2):
            raise ValueError("tristimulus_power: must be 1 (amplitudes) or 2 (energies)")
        if self.detection_smoothing_factor < 0:
            raise ValueError("detection_smoothing_factor: must be non-negative")
        if self.smoothing_cutoff_hz <= 0:
            raise ValueError("smoothing_cutoff_hz: must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("band_edges", "energy_blocklist"):
            d[key] = list(d[key])
        return d

    def updated(self, **overrides) -> "AnalysisConfig":
        """Copy with the non-``None`` entries of ``overrides`` applied."""
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def from_json(cls, path) -> "AnalysisConfig":
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a flat JSON object")
        return cls().updated(**data)
