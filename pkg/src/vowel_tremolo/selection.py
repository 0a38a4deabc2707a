"""PCA loading-modulus feature ranking over a corpus of feature matrices.

Per file: low-pass each trajectory, standardise, take the eigenvectors of the
correlation matrix, score each feature by the Euclidean norm of its loadings
on the first two components, and grade the ten best ``10, 9, ..., 1``. Over a
corpus the grades are averaged per feature.

Ties are broken by canonical column order (the order of ``FEATURE_NAMES``),
never by floating-point accident, so rankings are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .config import ENERGY_FEATURES
from .descriptors import FeatureMatrix

N_GRADED = 10
DEGENERATE_STD = 1e-12


@dataclass(frozen=True)
class SmoothingConfig:
    cutoff_hz: float = 15.0
    order: int = 2

    def validate(self, feature_rate: float) -> None:
        if not 0 < self.cutoff_hz < feature_rate / 2:
            raise ValueError(
                f"cutoff_hz={self.cutoff_hz} must lie in (0, {feature_rate / 2}) "
                f"for feature rate {feature_rate}"
            )
        if self.order < 1:
            raise ValueError("order must be >= 1")


def lowpass(x: np.ndarray, feature_rate: float, cfg: SmoothingConfig) -> np.ndarray:
    """Zero-phase Butterworth low-pass along axis 0."""
    cfg.validate(feature_rate)
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 8:
        raise ValueError(f"smoothing needs at least 8 samples, got {len(x)}")
    sos = butter(cfg.order, cfg.cutoff_hz, btype="low", fs=feature_rate, output="sos")
    ntaps = 2 * len(sos) + 1
    padlen = min(3 * ntaps, len(x) - 1)
    return sosfiltfilt(sos, x, axis=0, padlen=padlen)


def smooth_columns(M: FeatureMatrix, cfg: SmoothingConfig | None = None) -> FeatureMatrix:
    cfg = cfg or SmoothingConfig()
    values = M.values
    out = lowpass(values, M.feature_rate, cfg)
    constant = np.ptp(values, axis=0) == 0
    out[:, constant] = values[:, constant]
    return M.with_values(out)


class Standardized(NamedTuple):
    Z: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    degenerate: np.ndarray


def standardize(X) -> Standardized:
    """Zero-mean, unit population-variance columns.

    Columns whose std is below ``1e-12`` (relative to their magnitude when that
    exceeds 1) are set to zero and flagged degenerate.
    """
    X = np.asarray(getattr(X, "values", X), dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise ValueError("standardize needs a 2-D matrix with at least 2 rows")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    scale = np.maximum(1.0, np.abs(X).max(axis=0))
    degenerate = stds < DEGENERATE_STD * scale
    safe = np.where(degenerate, 1.0, stds)
    Z = (X - means) / safe
    Z[:, degenerate] = 0.0
    return Standardized(Z, means, stds, degenerate)


@dataclass(frozen=True)
class PcaResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column j is component j
    degenerate: np.ndarray = field(default=None)

    @property
    def explained(self) -> np.ndarray:
        total = self.eigenvalues.sum()
        if total <= 0:
            return np.zeros_like(self.eigenvalues)
        return self.eigenvalues / total

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.explained)

    def flip_signs(self, signs) -> "PcaResult":
        """Copy with eigenvector columns multiplied by ``signs`` (each +-1)."""
        return PcaResult(self.eigenvalues, self.eigenvectors * np.asarray(signs), self.degenerate)


def pca(Z, degenerate=None) -> PcaResult:
    """Eigendecomposition of ``Z.T @ Z / rows``, components by descending eigenvalue.

    Each eigenvector is signed so its largest-magnitude entry is positive.
    """
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or len(Z) < 2:
        raise ValueError("pca needs a 2-D matrix with at least 2 rows")
    if not np.all(np.isfinite(Z)):
        raise ValueError("pca input contains non-finite values")
    C = Z.T @ Z / len(Z)
    C = 0.5 * (C + C.T)
    vals, vecs = np.linalg.eigh(C)
    order = np.argsort(-vals, kind="stable")
    vals = np.maximum(vals[order], 0.0)
    vecs = vecs[:, order]
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    if degenerate is None:
        degenerate = np.zeros(Z.shape[1], dtype=bool)
    return PcaResult(vals, vecs * signs, np.asarray(degenerate, dtype=bool))


@dataclass(frozen=True)
class LoadingTable:
    names: tuple
    l1: np.ndarray
    l2: np.ndarray
    modulus: np.ndarray

    def rows(self):
        for row in zip(self.names, self.l1, self.l2, self.modulus):
            yield row


def loading_modulus(res: PcaResult, names: Sequence[str]) -> LoadingTable:
    V = res.eigenvectors
    if V.shape[1] < 2:
        raise ValueError("need at least two principal components")
    if len(names) != V.shape[0]:
        raise ValueError("one name per feature required")
    l1 = V[:, 0].copy()
    l2 = V[:, 1].copy()
    if res.degenerate is not None:
        l1[res.degenerate] = 0.0
        l2[res.degenerate] = 0.0
    modulus = np.sqrt(l1 * l1 + l2 * l2)
    return LoadingTable(tuple(names), l1, l2, modulus)


@dataclass(frozen=True)
class FileRanking:
    source_id: str
    names: tuple  # canonical order
    order: tuple  # names by descending modulus
    weights: tuple  # ints aligned with ``names``
    moduli: np.ndarray = field(compare=False)
    explained_pc1: float = field(default=float("nan"), compare=False)
    explained_pc1_2: float = field(default=float("nan"), compare=False)
    loadings: LoadingTable | None = field(default=None, compare=False, repr=False)

    def weight(self, name: str) -> int:
        return self.weights[self.names.index(name)]

    def index(self, name: str) -> int:
        """1-based rank of ``name``."""
        return self.order.index(name) + 1

    @property
    def top(self) -> tuple:
        return self.order[:N_GRADED]

    def key(self) -> tuple:
        """Everything the ranking decides: the order and the grades."""
        return (self.source_id, self.names, self.order, self.weights)


def rank_file(table: LoadingTable, source_id: str = "", res: PcaResult | None = None) -> FileRanking:
    n = len(table.names)
    if n < N_GRADED:
        raise ValueError(f"ranking needs at least {N_GRADED} features, got {n}")
    idx = np.lexsort((np.arange(n), -table.modulus))
    weights = np.zeros(n, dtype=int)
    weights[idx[:N_GRADED]] = np.arange(N_GRADED, 0, -1)
    explained = res.explained if res is not None else np.array([np.nan, np.nan])
    return FileRanking(
        source_id,
        table.names,
        tuple(table.names[i] for i in idx),
        tuple(int(w) for w in weights),
        table.modulus,
        float(explained[0]),
        float(explained[0] + explained[1]),
        table,
    )


@dataclass(frozen=True)
class AggregateRanking:
    names: tuple  # descending mean weight
    weight_totals: tuple  # integer grade sums aligned with ``names``
    n: int
    excluded: tuple = ()

    @property
    def mean_weights(self) -> np.ndarray:
        return np.array(self.weight_totals, dtype=np.float64) / self.n

    def exact_means(self) -> list[Fraction]:
        return [Fraction(t, self.n) for t in self.weight_totals]

    def mean_weight(self, name: str) -> float:
        return self.weight_totals[self.names.index(name)] / self.n

    def rank(self, name: str) -> int:
        return self.names.index(name) + 1

    def items(self):
        return [(n, t / self.n) for n, t in zip(self.names, self.weight_totals)]


def aggregate(rankings: Sequence[FileRanking]) -> AggregateRanking:
    if not rankings:
        raise ValueError("aggregate needs at least one ranking")
    names = rankings[0].names
    for r in rankings[1:]:
        if r.names != names:
            raise ValueError(f"ranking {r.source_id!r} covers a different feature set")
    totals = np.sum([r.weights for r in rankings], axis=0)
    idx = np.lexsort((np.arange(len(names)), -totals))
    return AggregateRanking(
        tuple(names[i] for i in idx), tuple(int(totals[i]) for i in idx), len(rankings)
    )


def exclude_energy(agg: AggregateRanking, blocklist=ENERGY_FEATURES) -> AggregateRanking:
    blocklist = tuple(blocklist)
    unknown = [b for b in blocklist if b not in agg.names and b not in agg.excluded]
    if unknown:
        raise KeyError(f"unknown feature(s) in blocklist: {', '.join(unknown)}")
    keep = [i for i, n in enumerate(agg.names) if n not in blocklist]
    return AggregateRanking(
        tuple(agg.names[i] for i in keep),
        tuple(agg.weight_totals[i] for i in keep),
        agg.n,
        agg.excluded + tuple(b for b in blocklist if b not in agg.excluded),
    )


def rank_matrix(
    M: FeatureMatrix, smoothing: SmoothingConfig | None = SmoothingConfig()
) -> FileRanking:
    """Smooth, standardise, PCA, modulus and rank one file."""
    if smoothing is not None:
        M = smooth_columns(M, smoothing)
    std = standardize(M.values)
    res = pca(std.Z, std.degenerate)
    return rank_file(loading_modulus(res, M.names), M.source_id, res)


def ranking_report(
    rankings: Sequence[FileRanking],
    agg: AggregateRanking,
    final: AggregateRanking,
    config: dict | None = None,
) -> dict:
    """JSON-ready report; ``agg`` is pre-blocklist, ``final`` post-blocklist."""
    per_file = []
    for r in rankings:
        top = [
            {"name": n, "modulus": float(r.moduli[r.names.index(n)]), "weight": r.weight(n)}
            for n in r.top
        ]
        entry = {
            "source_id": r.source_id,
            "explained_pc1": r.explained_pc1,
            "explained_pc1_2": r.explained_pc1_2,
            "top10": top,
        }
        if r.loadings is not None:
            entry["loadings"] = [
                {"name": n, "l1": float(a), "l2": float(b), "modulus": float(m)}
                for n, a, b, m in r.loadings.rows()
            ]
        per_file.append(entry)
    report = {
        "corpus": [r.source_id for r in rankings],
        "per_file": per_file,
        "aggregate": [{"name": n, "mean_weight": w} for n, w in final.items()],
        "aggregate_pre_exclusion": [{"name": n, "mean_weight": w} for n, w in agg.items()],
        "excluded": list(final.excluded),
    }
    if config is not None:
        report["config"] = config
    return report


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"
