"""Error metrics that account for the unavoidable global-phase ambiguity."""
from __future__ import annotations

import numpy as np


def aligned_error(x_hat, x_true):
    """``min_phi ||x_hat - exp(j phi) x_true||^2``.

    The optimal rotation is ``phi = angle(x_true^H x_hat)``.
    """
    x_hat = np.asarray(x_hat, dtype=complex)
    x_true = np.asarray(x_true, dtype=complex)
    if x_hat.shape != x_true.shape:
        raise ValueError(f"length mismatch: {x_hat.shape} vs {x_true.shape}")
    if not np.any(x_true):
        raise ValueError("reference signal is zero")
    inner = np.vdot(x_true, x_hat)
    rot = inner / abs(inner) if inner != 0 else 1.0
    return float(np.sum(np.abs(x_hat - rot * x_true) ** 2))


def aligned_error_2d(x_hat, x_true, shape):
    """Aligned error that also forgives the conjugate-flip (twin image) ambiguity.

    For an image confined to a rectangular window of an oversampled 2D DFT,
    ``conj(X[::-1, ::-1])`` produces the same Fourier magnitudes as ``X``.
    """
    twin = np.conj(np.reshape(x_true, shape)[::-1, ::-1]).ravel()
    return min(aligned_error(x_hat, x_true), aligned_error(x_hat, twin))


def to_db(value):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(value)


def mse_db(errors):
    """``10 log10(mean(errors))`` over a nonempty collection of squared errors."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("need at least one error value")
    return float(to_db(np.mean(errors)))


def success_rate(errors, threshold=1e-4):
    """Fraction of trials whose squared error is at most ``threshold``."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("need at least one error value")
    return float(np.mean(errors <= threshold))


def realized_snr_db(clean, noise):
    """``10 log10(||clean||^2 / ||noise||^2)``."""
    num = np.linalg.norm(clean) ** 2
    den = np.linalg.norm(noise) ** 2
    if num == 0 or den == 0:
        raise ValueError("SNR needs nonzero clean and noise vectors")
    return float(10.0 * np.log10(num / den))
