"""Small input-validation helpers used by the public entry points."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, InvalidParameterError


def require_positive(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise InvalidParameterError(f"{name} must be finite and > 0, got {value!r}")
    return value


def require_non_negative(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0.0:
        raise InvalidParameterError(f"{name} must be finite and >= 0, got {value!r}")
    return value


def require_in_range(name: str, value: float, low: float, high: float) -> float:
    value = float(value)
    if not np.isfinite(value) or not (low <= value <= high):
        raise InvalidParameterError(f"{name} must lie in [{low}, {high}], got {value!r}")
    return value


def as_sample_array(name: str, samples) -> np.ndarray:
    """Coerce to a 1-D float64 array and reject empty or non-finite data."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite samples")
    return arr


def as_feature_matrix(name: str, X) -> np.ndarray:
    """Coerce to an (n, 2) float64 matrix of finite feature rows."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidInputError(f"{name} must have shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr
