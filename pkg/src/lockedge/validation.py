"""Input validation helpers shared across the package.

Every public entry point funnels array-like input through these so that the
numeric core can assume finite float64 C-order arrays and integer labels.
"""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError


def as_matrix(
    X,
    name: str = "X",
    n_cols: int | None = None,
    require_finite: bool = True,
) -> np.ndarray:
    """Coerce ``X`` to a 2-D float64 array, validating shape and finiteness."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    if n_cols is not None and arr.shape[1] != n_cols:
        raise ValueError(
            f"{name} has {arr.shape[1]} columns, expected {n_cols}"
        )
    if require_finite and not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return np.ascontiguousarray(arr)


def as_labels(
    y,
    name: str = "y",
    n_classes: int | None = None,
    n_rows: int | None = None,
) -> np.ndarray:
    """Coerce ``y`` to a 1-D int64 label array in ``[0, n_classes)``."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.issubdtype(arr.dtype, np.integer):
        as_int = np.asarray(arr, dtype=np.int64)
        if not np.array_equal(as_int, arr):
            raise ValueError(f"{name} must hold integer class labels")
        arr = as_int
    arr = arr.astype(np.int64, copy=False)
    if n_rows is not None and arr.shape[0] != n_rows:
        raise ValueError(
            f"{name} has {arr.shape[0]} entries, expected {n_rows}"
        )
    if arr.min() < 0:
        raise ValueError(f"{name} contains negative labels")
    if n_classes is not None and arr.max() >= n_classes:
        raise ValueError(
            f"{name} contains label {int(arr.max())} outside [0, {n_classes})"
        )
    return arr


def check_fitted(estimator, attribute: str) -> None:
    """Raise ``NotFittedError`` unless ``estimator`` carries ``attribute``."""
    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )


def positive_int(value, name: str) -> int:
    """Validate that ``value`` is a positive integer and return it as int."""
    iv = int(value)
    if iv != value or iv <= 0:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return iv
