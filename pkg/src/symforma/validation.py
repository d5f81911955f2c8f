"""Input validation shared by the estimator layer and the CLI."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ArgumentError


def check_configuration(p, n: int, d: int | None = None) -> np.ndarray:
    """Return ``p`` as a finite float array of shape ``(n, d)``.

    Accepts ``(n, d)`` arrays or flat vectors of length ``n * d``.
    """
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 1:
        if d is None:
            if arr.size % n:
                raise ArgumentError(f"flat configuration of length {arr.size} does not split over {n} vertices")
            d = arr.size // n
        arr = arr.reshape(-1, d) if arr.size == n * d else arr
    arr = check_array(arr, ensure_2d=True, dtype=float, ensure_all_finite=True, input_name="configuration")
    if arr.shape[0] != n or (d is not None and arr.shape[1] != d):
        want = f"({n}, {d})" if d is not None else f"({n}, d)"
        raise ArgumentError(f"configuration has shape {arr.shape}, expected {want}")
    return arr


def check_batch(X, n: int, d: int) -> np.ndarray:
    """Validate a batch of flattened configurations, shape ``(k, n * d)``."""
    X = check_array(X, ensure_2d=False, dtype=float, ensure_all_finite=True, input_name="X")
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim == 3:
        X = X.reshape(X.shape[0], -1)
    if X.shape[1] != n * d:
        raise ArgumentError(f"X has {X.shape[1]} columns, expected n * d = {n * d}")
    return X


def check_edges(edges, n: int, one_based: bool = True) -> list:
    """Validate an edge list and return sorted 0-based pairs."""
    shift = 1 if one_based else 0
    out = []
    for k, e in enumerate(edges):
        if len(e) != 2:
            raise ArgumentError(f"edge {k} has {len(e)} endpoints")
        i, j = (int(x) - shift for x in e)
        if not (0 <= i < n and 0 <= j < n):
            raise ArgumentError(f"edge {k} = {tuple(e)} has an endpoint outside 1..{n}" if one_based else f"edge {k} out of range")
        if i == j:
            raise ArgumentError(f"edge {k} is a self-loop")
        out.append((min(i, j), max(i, j)))
    if len(set(out)) != len(out):
        raise ArgumentError("edge list contains duplicates")
    return out


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ArgumentError(f"{name} must be positive and finite, got {value}")
    return value
