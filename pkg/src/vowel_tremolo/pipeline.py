"""End-to-end workflows: analyse a file, rank a corpus, detect a tremolo."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .audio import AudioBuffer, load_audio
from .config import AnalysisConfig
from .descriptors import FeatureMatrix, check_feature_name, compute_feature_matrix
from .events import (
    ControlBuffer,
    DetectionTrace,
    EventList,
    IOIStats,
    detection_function,
    export_control,
    gate,
    inter_onset_intervals,
    normalize_trace,
    pick_peaks,
    smooth_to_rate,
)
from .selection import (
    AggregateRanking,
    FileRanking,
    SmoothingConfig,
    aggregate,
    exclude_energy,
    lowpass,
    rank_matrix,
)

log = logging.getLogger(__name__)


def smoothing_of(cfg: AnalysisConfig) -> SmoothingConfig:
    return SmoothingConfig(cfg.smoothing_cutoff_hz, cfg.smoothing_order)


def analyze(source, cfg: AnalysisConfig | None = None, source_id: str | None = None) -> FeatureMatrix:
    """Feature matrix of a WAV path, an ``AudioBuffer`` or a features CSV path."""
    cfg = cfg or AnalysisConfig()
    if isinstance(source, FeatureMatrix):
        return source
    if isinstance(source, AudioBuffer):
        return compute_feature_matrix(source, cfg, source_id or "")
    path = str(source)
    if path.endswith(".csv"):
        return FeatureMatrix.from_csv(path, source_id)
    return compute_feature_matrix(load_audio(path), cfg, source_id or _stem(path))


def _stem(path: str) -> str:
    from pathlib import Path

    return Path(path).stem


@dataclass(frozen=True)
class CorpusRanking:
    rankings: tuple
    aggregate: AggregateRanking  # before the blocklist
    final: AggregateRanking  # after the blocklist

    @property
    def selected(self) -> str:
        return self.final.names[0]


def rank_corpus(
    matrices: Sequence[FeatureMatrix], cfg: AnalysisConfig | None = None
) -> CorpusRanking:
    cfg = cfg or AnalysisConfig()
    rankings: list[FileRanking] = [rank_matrix(M, smoothing_of(cfg)) for M in matrices]
    agg = aggregate(rankings)
    return CorpusRanking(tuple(rankings), agg, exclude_energy(agg, cfg.energy_blocklist))


@dataclass(frozen=True)
class Detection:
    feature: str
    trace: DetectionTrace  # gated and normalised
    df: DetectionTrace
    events: EventList
    ioi: IOIStats | None
    control: ControlBuffer


def detect(M: FeatureMatrix, feature: str, cfg: AnalysisConfig | None = None) -> Detection:
    """Gate, smooth, normalise and peak-pick one descriptor trajectory of ``M``."""
    cfg = cfg or AnalysisConfig()
    if feature == "auto":
        feature = rank_corpus([M], cfg).selected
    check_feature_name(feature)
    raw = M.column(feature)
    smoothed = lowpass(raw, M.feature_rate, smoothing_of(cfg)) if np.ptp(raw) > 0 else raw
    rms = np.sqrt(M.column("TotalEnergy")) if "TotalEnergy" in M.names else None
    trace = DetectionTrace(smoothed, M.timestamps, M.feature_rate, feature, rms=rms)
    trace = gate(trace, cfg.start_trim_s, cfg.end_trim_s, cfg.rms_floor)
    trace = smooth_to_rate(trace, cfg.detection_smoothing_factor, cfg.smoothing_cutoff_hz,
                           cfg.smoothing_order)
    trace = normalize_trace(trace)
    df = detection_function(trace)
    events = pick_peaks(
        df, cfg.threshold_mode, cfg.k, cfg.min_spacing_s, cfg.threshold, cfg.threshold_window_s
    )
    ioi = inter_onset_intervals(events) if len(events) >= 2 else None
    return Detection(feature, trace, df, events, ioi, export_control(trace))
