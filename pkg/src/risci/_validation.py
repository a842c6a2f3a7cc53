"""Input checks for the reconstruction estimators.

scikit-learn's ``check_array`` rejects complex input, so the complex-valued
sensing systems are validated here instead.
"""
from __future__ import annotations

import numbers

import numpy as np


def check_operator(H, name: str = "H") -> np.ndarray:
    entries = getattr(H, "entries", H)
    A = np.asarray(entries)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {A.shape}")
    if A.shape[0] == 0 or A.shape[1] == 0:
        raise ValueError(f"{name} must be non-empty, got shape {A.shape}")
    if not np.issubdtype(A.dtype, np.number):
        raise TypeError(f"{name} must be numeric, got dtype {A.dtype}")
    A = A.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or inf")
    return A


def check_measurements(g, n_rows: int) -> np.ndarray:
    values = getattr(g, "g", g)
    y = np.asarray(values).astype(np.complex128, copy=False).reshape(-1)
    if len(y) != n_rows:
        raise ValueError(f"measurement length {len(y)} does not match {n_rows} operator rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("measurements contain NaN or inf")
    return y


def check_system(H, g) -> tuple[np.ndarray, np.ndarray]:
    A = check_operator(H)
    return A, check_measurements(g, A.shape[0])


def check_positive(value, name: str, integer: bool = False):
    kind = numbers.Integral if integer else numbers.Real
    if not isinstance(value, kind) or isinstance(value, bool) or not value > 0:
        raise ValueError(f"{name} must be a positive {'integer' if integer else 'number'}, got {value!r}")
    return value
