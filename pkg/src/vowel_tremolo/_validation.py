"""Input validation helpers shared by the pipeline stages and estimators."""

from __future__ import annotations

import numpy as np


class AnalysisError(ValueError):
    """Raised when an input cannot be analysed under the requested settings."""


def check_positive(value, name: str, *, integer: bool = False):
    if integer and (not isinstance(value, (int, np.integer)) or isinstance(value, bool)):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value


def check_non_negative(value, name: str):
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be non-negative, got {value!r}")
    return value


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def check_finite_array(x, name: str, *, ndim: int | None = None) -> np.ndarray:
    """Convert ``x`` to a float64 array, rejecting NaN/inf and wrong ranks."""
    arr = np.asarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_weights(weights, positions) -> tuple[np.ndarray, np.ndarray]:
    w = check_finite_array(weights, "weights", ndim=1)
    x = check_finite_array(positions, "positions", ndim=1)
    if w.shape != x.shape:
        raise ValueError(f"weights and positions differ in length: {w.shape} vs {x.shape}")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    return w, x
