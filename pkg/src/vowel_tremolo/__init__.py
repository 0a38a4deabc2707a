"""Vowel-tremolo analysis: frame descriptors, PCA feature ranking, event detection."""

from ._validation import AnalysisError
from .audio import AudioBuffer, FrameSequence, Spectrum, frame_signal, load_audio, spectrum_of_frame, write_wav
from .config import ENERGY_FEATURES, AnalysisConfig
from .descriptors import FEATURE_NAMES, FeatureMatrix, compute_feature_matrix
from .estimators import DescriptorExtractor, LoadingModulusSelector, TremoloEventDetector
from .events import DetectionTrace, EventList, ControlBuffer, inter_onset_intervals, pick_peaks
from .pipeline import analyze, detect, rank_corpus
from .pitch import estimate_f0, extract_harmonics
from .selection import AggregateRanking, FileRanking, SmoothingConfig, pca, rank_matrix
from .synth import VOWELS, TremoloSpec, synthesize_tremolo

__version__ = "0.1.0"

__all__ = [
    "AggregateRanking",
    "AnalysisConfig",
    "AnalysisError",
    "AudioBuffer",
    "ControlBuffer",
    "DescriptorExtractor",
    "DetectionTrace",
    "ENERGY_FEATURES",
    "EventList",
    "FEATURE_NAMES",
    "FeatureMatrix",
    "FileRanking",
    "FrameSequence",
    "LoadingModulusSelector",
    "SmoothingConfig",
    "Spectrum",
    "TremoloEventDetector",
    "TremoloSpec",
    "VOWELS",
    "analyze",
    "compute_feature_matrix",
    "detect",
    "estimate_f0",
    "extract_harmonics",
    "frame_signal",
    "inter_onset_intervals",
    "load_audio",
    "pca",
    "pick_peaks",
    "rank_corpus",
    "rank_matrix",
    "spectrum_of_frame",
    "synthesize_tremolo",
    "write_wav",
]
