"""Input validation helpers that keep coordinates exact."""
from __future__ import annotations

from fractions import Fraction
from numbers import Integral

import numpy as np
from sklearn.utils.validation import check_consistent_length

from .geometry import as_point


def check_rational_array(X, *, n_features: int | None = None) -> list[tuple[Fraction, ...]]:
    """Validate a 2-D array-like and convert every entry to a Fraction.

    Unlike :func:`sklearn.utils.check_array` this never casts through float,
    so string and Fraction inputs survive unchanged.
    """
    if hasattr(X, "to_numpy"):
        X = X.to_numpy(dtype=object)
    arr = np.asarray(X, dtype=object)
    if arr.ndim == 1:
        raise ValueError(
            "Expected a 2D array, got a 1D array; reshape with X.reshape(-1, 1) "
            "for a single feature or X.reshape(1, -1) for a single sample."
        )
    if arr.ndim != 2:
        raise ValueError(f"Expected a 2D array, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"Found array with shape {arr.shape}; need at least one sample and feature")
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError(f"X has {arr.shape[1]} features, but the estimator expects {n_features}")
    return [as_point(row) for row in arr]


def check_targets(y, n_samples: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 2 and y.shape[1] == 1:
        y = y.ravel()
    if y.ndim != 1:
        raise ValueError(f"y must be 1-dimensional, got shape {y.shape}")
    check_consistent_length(np.empty(n_samples), y)
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains NaN or infinity")
    return y


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_k(k, n: int) -> int:
    k = check_positive_int(k, "k")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of samples n={n}")
    return k
