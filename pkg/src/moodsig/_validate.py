"""Input validation helpers shared by the estimators and pipeline stages."""
from __future__ import annotations

import numpy as np


def as_float_matrix(X, name: str = "X") -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return arr


def check_feature_count(X: np.ndarray, expected: int, name: str = "X") -> None:
    if X.shape[1] != expected:
        raise ValueError(
            f"{name} has {X.shape[1]} features, the model expects {expected}"
        )


def check_likert(values: np.ndarray, name: str = "scores") -> None:
    """Scores must sit on the 7-point scale (fractional model outputs are
    validated elsewhere; raw inputs must be whole numbers in 1..7)."""
    arr = np.asarray(values)
    if not np.all(np.isfinite(arr.astype(float))):
        raise ValueError(f"{name} contains NaN or infinite entries")
    if np.any(arr < 1) or np.any(arr > 7):
        raise ValueError(f"{name} must lie in 1..7")
    if not np.all(np.equal(np.mod(arr, 1), 0)):
        raise ValueError(f"{name} must be whole numbers on the 1..7 scale")
