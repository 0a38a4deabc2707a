"""scikit-learn style wrappers around the analysis pipeline.

``DescriptorExtractor`` turns audio into feature matrices,
``LoadingModulusSelector`` ranks features over a corpus and keeps the best,
``TremoloEventDetector`` recovers tremolo onsets from one trajectory.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive
from .audio import AudioBuffer
from .config import ENERGY_FEATURES, AnalysisConfig
from .descriptors import FEATURE_NAMES, FeatureMatrix
from .pipeline import analyze, detect, rank_corpus


def _as_matrices(X) -> tuple[list[FeatureMatrix], bool]:
    """Normalise ``X`` to a list of feature matrices; the flag says whether it was one."""
    if isinstance(X, FeatureMatrix):
        return [X], True
    if isinstance(X, (list, tuple)) and X and all(isinstance(m, FeatureMatrix) for m in X):
        return list(X), False
    raise TypeError(
        f"expected a FeatureMatrix or a non-empty sequence of them, got {type(X).__name__}"
    )


class DescriptorExtractor(TransformerMixin, BaseEstimator):
    """Compute the 52 frame descriptors of audio signals.

    Parameters
    ----------
    frame_size, hop_size : int
        Analysis frame length and hop in samples. ``frame_size`` must be a
        power of two.
    window : {"hann", "hamming", "rectangular"}
    fmin, fmax : float
        F0 search range in Hz.
    max_h : int
        Number of harmonic partials tracked.
    hold_unvoiced : bool
        Repeat the last voiced value of harmonic descriptors through
        unvoiced frames instead of writing zeros.
    sample_rate : int
        Rate assumed for bare sample arrays passed to ``transform``.

    Notes
    -----
    ``transform`` accepts an ``AudioBuffer``, a WAV path, a 1-D sample array
    or a list of any of these. A single input gives one ``FeatureMatrix``,
    a list gives a list. ``FeatureMatrix`` converts to a plain array with
    ``np.asarray``.
    """

    def __init__(self, frame_size=2048, hop_size=512, window="hann", fmin=70.0, fmax=1200.0,
                 max_h=20, hold_unvoiced=True, sample_rate=44100):
        self.frame_size = frame_size
        self.hop_size = hop_size
        self.window = window
        self.fmin = fmin
        self.fmax = fmax
        self.max_h = max_h
        self.hold_unvoiced = hold_unvoiced
        self.sample_rate = sample_rate

    def _config(self) -> AnalysisConfig:
        return AnalysisConfig(
            frame_size=self.frame_size, hop_size=self.hop_size, window=self.window,
            fmin=self.fmin, fmax=self.fmax, max_h=self.max_h, hold_unvoiced=self.hold_unvoiced,
        )

    def fit(self, X=None, y=None):
        self._config()
        check_positive(self.sample_rate, "sample_rate", integer=True)
        self.n_features_out_ = len(FEATURE_NAMES)
        return self

    def _one(self, x, cfg):
        if isinstance(x, np.ndarray):
            x = AudioBuffer(x, self.sample_rate)
        return analyze(x, cfg)

    def transform(self, X):
        check_is_fitted(self, "n_features_out_")
        cfg = self._config()
        if isinstance(X, (list, tuple)):
            return [self._one(x, cfg) for x in X]
        return self._one(X, cfg)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(FEATURE_NAMES, dtype=object)


class LoadingModulusSelector(SelectorMixin, BaseEstimator):
    """Keep the descriptors with the best mean PCA loading-modulus grade.

    Each matrix is low-passed, standardised and decomposed; the ten
    features with the largest first-two-component loading modulus are graded
    10 to 1 and the grades are averaged over the corpus. Blocklisted
    features are dropped before choosing.

    Parameters
    ----------
    n_select : int
        How many top-ranked features ``transform`` keeps.
    smoothing_cutoff_hz : float
    smoothing_order : int
    energy_blocklist : tuple of str

    Attributes
    ----------
    rankings_ : tuple of FileRanking
    aggregate_ : AggregateRanking
        Corpus ranking before the blocklist.
    final_ : AggregateRanking
        Corpus ranking after the blocklist.
    selected_feature_ : str
    feature_names_in_ : ndarray of str
    n_features_in_ : int
    """

    def __init__(self, n_select=1, smoothing_cutoff_hz=15.0, smoothing_order=2,
                 energy_blocklist=ENERGY_FEATURES):
        self.n_select = n_select
        self.smoothing_cutoff_hz = smoothing_cutoff_hz
        self.smoothing_order = smoothing_order
        self.energy_blocklist = energy_blocklist

    def fit(self, X, y=None):
        """Rank a single ``FeatureMatrix`` or a corpus (sequence of them)."""
        matrices, _ = _as_matrices(X)
        check_positive(self.n_select, "n_select", integer=True)
        cfg = AnalysisConfig(
            smoothing_cutoff_hz=self.smoothing_cutoff_hz,
            smoothing_order=self.smoothing_order,
            energy_blocklist=tuple(self.energy_blocklist),
        )
        result = rank_corpus(matrices, cfg)
        if self.n_select > len(result.final.names):
            raise ValueError(
                f"n_select={self.n_select} exceeds the {len(result.final.names)} ranked features"
            )
        self.rankings_ = result.rankings
        self.aggregate_ = result.aggregate
        self.final_ = result.final
        self.selected_feature_ = result.selected
        self.feature_names_in_ = np.asarray(matrices[0].names, dtype=object)
        self.n_features_in_ = len(matrices[0].names)
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "final_")
        keep = set(self.final_.names[: self.n_select])
        return np.array([n in keep for n in self.feature_names_in_])

    def transform(self, X):
        """Selected columns of a ``FeatureMatrix`` (names checked) or of a plain array."""
        if isinstance(X, FeatureMatrix):
            check_is_fitted(self, "final_")
            if X.names != tuple(self.feature_names_in_):
                raise ValueError("FeatureMatrix columns differ from those seen in fit")
            return X.values[:, self.get_support()]
        return super().transform(X)

    def ranked_features(self) -> list[tuple[str, float]]:
        """``(name, mean weight)`` pairs after the blocklist, best first."""
        check_is_fitted(self, "final_")
        return self.final_.items()


class TremoloEventDetector(BaseEstimator):
    """Derivative peak-picking on one descriptor trajectory.

    Parameters
    ----------
    feature : str
        Descriptor to follow, or ``"auto"`` to pick the best-ranked one of
        the input itself.
    start_trim_s, end_trim_s : float
        Seconds dropped from either end before detection.
    rms_floor : float
        Leading and trailing frames quieter than this are dropped as well.
    threshold_mode : {"adaptive", "fixed"}
    k : float
        MAD multiplier of the adaptive threshold.
    threshold : float
        Level of the fixed threshold.
    threshold_window_s : float
    min_spacing_s : float
    smoothing_cutoff_hz : float
    detection_smoothing_factor : float
        Trace cutoff as a multiple of its dominant rate; 0 disables.

    Attributes
    ----------
    detection_ : Detection
    feature_ : str
    onsets_ : ndarray
    rate_hz_ : float
        ``nan`` when fewer than two events were found.
    """

    def __init__(self, feature="auto", start_trim_s=0.25, end_trim_s=0.25, rms_floor=0.0,
                 threshold_mode="adaptive", k=1.0, threshold=0.1, threshold_window_s=1.0,
                 min_spacing_s=0.06, smoothing_cutoff_hz=15.0, detection_smoothing_factor=2.0):
        self.feature = feature
        self.start_trim_s = start_trim_s
        self.end_trim_s = end_trim_s
        self.rms_floor = rms_floor
        self.threshold_mode = threshold_mode
        self.k = k
        self.threshold = threshold
        self.threshold_window_s = threshold_window_s
        self.min_spacing_s = min_spacing_s
        self.smoothing_cutoff_hz = smoothing_cutoff_hz
        self.detection_smoothing_factor = detection_smoothing_factor

    def _config(self) -> AnalysisConfig:
        params = self.get_params()
        feature = params.pop("feature")
        return AnalysisConfig(selected_feature=feature, **params)

    def _detect(self, X):
        matrices, single = _as_matrices(X)
        if not single:
            raise TypeError("TremoloEventDetector works on one FeatureMatrix at a time")
        cfg = self._config()
        return detect(matrices[0], cfg.selected_feature, cfg)

    def fit(self, X, y=None):
        det = self._detect(X)
        self.detection_ = det
        self.feature_ = det.feature
        self.onsets_ = det.events.onsets
        self.rate_hz_ = det.ioi.rate_hz if det.ioi is not None else float("nan")
        return self

    def predict(self, X) -> np.ndarray:
        """Onset times in seconds."""
        return self._detect(X).events.onsets

    def transform(self, X) -> np.ndarray:
        """The gated, normalised trajectory in ``[-1, 1]``."""
        return self._detect(X).control.value

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).onsets_


def extract(signals: Sequence, **params) -> list[FeatureMatrix]:
    """Convenience: ``DescriptorExtractor(**params).fit_transform(list(signals))``."""
    return DescriptorExtractor(**params).fit_transform(list(signals))
