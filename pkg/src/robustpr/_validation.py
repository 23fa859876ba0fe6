"""Input checks shared by the estimators."""
from __future__ import annotations

import numpy as np

from .linop import MeasurementOperator, make_dense


def as_operator(A):
    """Wrap a 2D array as a dense operator; pass operators through unchanged."""
    if isinstance(A, MeasurementOperator):
        return A
    arr = np.asarray(A)
    if arr.ndim != 2:
        raise ValueError(f"A must be a 2D matrix or a MeasurementOperator, got ndim={arr.ndim}")
    return make_dense(arr)


def check_magnitudes(y, op):
    """Measured magnitudes as a finite float vector of length ``op.m``."""
    y = np.asarray(y)
    if np.iscomplexobj(y):
        raise ValueError("magnitudes must be real")
    y = y.astype(float).ravel()
    if y.shape != (op.m,):
        raise ValueError(f"expected {op.m} magnitudes, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise ValueError("magnitudes contain NaN or inf")
    return y


def check_signal(x, op, name="x0"):
    """A finite complex vector of length ``op.n``."""
    x = np.asarray(x).astype(complex).ravel()
    if x.shape != (op.n,):
        raise ValueError(f"{name} must have {op.n} entries, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or inf")
    return x
