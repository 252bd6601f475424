"""Input checks shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

RATING_COLUMNS = ("user", "item", "rating")


def _as_int_array(X, n_cols: int, what: str) -> np.ndarray:
    if hasattr(X, "columns") and set(RATING_COLUMNS[:n_cols]) <= set(X.columns):
        X = X[list(RATING_COLUMNS[:n_cols])].to_numpy()
    arr = check_array(X, dtype=None, ensure_2d=True, ensure_min_samples=1)
    if arr.shape[1] != n_cols:
        raise ValueError(f"{what} must have {n_cols} columns, got {arr.shape[1]}")
    as_int = arr.astype(np.int64)
    if not np.array_equal(as_int, arr):
        raise ValueError(f"{what} must hold integer ids and ratings")
    return as_int


def check_ratings(X) -> np.ndarray:
    """``(n, 3)`` int64 array of ``user, item, rating`` with unique ``(user, item)``.

    Accepts arrays, nested lists or a DataFrame with ``user``/``item``/``rating`` columns.
    """
    arr = _as_int_array(X, 3, "ratings")
    _, counts = np.unique(arr[:, :2], axis=0, return_counts=True)
    if (counts > 1).any():
        raise ValueError("ratings contain duplicate (user, item) pairs")
    return arr


def check_pairs(X) -> np.ndarray:
    """``(n, 2)`` int64 array of ``user, item``."""
    return _as_int_array(X, 2, "user/item pairs")
