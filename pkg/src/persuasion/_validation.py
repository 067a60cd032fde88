"""Input validation helpers shared by every module."""

from __future__ import annotations

import numpy as np

SIMPLEX_TOL = 1e-12


def as_float_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def is_simplex(x: np.ndarray, tol: float = SIMPLEX_TOL) -> bool:
    return bool(np.all(x >= -tol) and abs(float(np.sum(x)) - 1.0) <= tol)


def is_strictly_increasing(x: np.ndarray) -> bool:
    return bool(np.all(np.diff(x) > 0))


def frozen(arr: np.ndarray) -> np.ndarray:
    """Return a read-only copy so value objects stay immutable."""
    out = np.array(arr, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


def check_index(k: int, n: int, name: str = "k") -> int:
    k = int(k)
    if not 0 <= k < n:
        raise IndexError(f"{name}={k} out of range for {n} types")
    return k
