"""Heavy-tailed noise samplers and SNR control.

All noise is real valued and is added to the measured magnitudes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Laplacian:
    """Zero-mean Laplacian noise with standard deviation ``sigma``.

    Density ``exp(-sqrt(2)|n|/sigma) / (sqrt(2) sigma)``; variance ``sigma**2``.
    """

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"Laplacian sigma must be positive, got {self.sigma}")

    def sample(self, size, rng):
        return rng.laplace(0.0, self.sigma / math.sqrt(2.0), size=size)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        b = self.sigma / math.sqrt(2.0)
        return np.where(t < 0, 0.5 * np.exp(t / b), 1.0 - 0.5 * np.exp(-t / b))


@dataclass(frozen=True)
class AlphaStable:
    """Stable law with characteristic function

    ``exp(j t mu - gamma**alpha |t|**alpha (1 - j beta sgn(t) tan(pi alpha / 2)))``.

    ``alpha=2`` gives a Gaussian of variance ``2 gamma**2``; ``alpha=1,
    beta=0`` gives a Cauchy law with scale ``gamma``.
    """

    alpha: float = 0.8
    beta: float = 0.0
    gamma: float = 2.0
    mu: float = 0.0

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValueError(f"stability alpha must lie in (0, 2], got {self.alpha}")
        if not -1 <= self.beta <= 1:
            raise ValueError(f"skewness beta must lie in [-1, 1], got {self.beta}")
        if not self.gamma > 0:
            raise ValueError(f"scale gamma must be positive, got {self.gamma}")
        if not np.isfinite(self.mu):
            raise ValueError("shift mu must be finite")

    def sample(self, size, rng):
        return chambers_mallows_stuck(self.alpha, self.beta, self.gamma, self.mu, size, rng)


@dataclass(frozen=True)
class GaussianMixture:
    """Two-component zero-mean Gaussian mixture.

    ``weights`` are the component probabilities and ``variances`` the
    component variances. The rare, wide component models outliers.
    """

    weights: tuple = (0.9, 0.1)
    variances: tuple = (0.1, 100.0)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        v = np.asarray(self.variances, dtype=float)
        if w.shape != (2,) or v.shape != (2,):
            raise ValueError("mixture needs exactly two weights and two variances")
        if np.any(w < 0) or np.any(w > 1) or not math.isclose(w.sum(), 1.0, abs_tol=1e-12):
            raise ValueError(f"mixture weights must lie in [0, 1] and sum to 1, got {self.weights}")
        if np.any(v < 0):
            raise ValueError("mixture variances must be nonnegative")

    @property
    def variance(self):
        return float(np.dot(self.weights, self.variances))

    def sample(self, size, rng):
        comp = rng.choice(2, size=size, p=np.asarray(self.weights, dtype=float))
        std = np.sqrt(np.asarray(self.variances, dtype=float))[comp]
        return std * rng.standard_normal(size)


NoiseModel = Laplacian | AlphaStable | GaussianMixture


def chambers_mallows_stuck(alpha, beta, gamma, mu, size, rng):
    """Draw stable variates by the Chambers-Mallows-Stuck transform.

    Uses the Weron form for the characteristic function documented on
    :class:`AlphaStable`.
    """
    v = rng.uniform(-math.pi / 2, math.pi / 2, size=size)
    w = rng.standard_exponential(size=size)
    if alpha == 1.0:
        half_pi = math.pi / 2
        s = half_pi + beta * v
        x = (s * np.tan(v) - beta * np.log(half_pi * w * np.cos(v) / s)) / half_pi
        return gamma * x + (2 / math.pi) * beta * gamma * math.log(gamma) + mu
    tan_term = beta * math.tan(math.pi * alpha / 2)
    b = math.atan(tan_term) / alpha
    s = (1 + tan_term**2) ** (1 / (2 * alpha))
    x = (
        s
        * np.sin(alpha * (v + b))
        / np.cos(v) ** (1 / alpha)
        * (np.cos(v - alpha * (v + b)) / w) ** ((1 - alpha) / alpha)
    )
    return gamma * x + mu


def sample(model, m, rng):
    """Draw ``m`` i.i.d. noise values from ``model``."""
    if int(m) != m or m < 0:
        raise ValueError(f"sample count must be a nonnegative integer, got {m}")
    if not isinstance(model, (Laplacian, AlphaStable, GaussianMixture)):
        raise TypeError(f"unknown noise model {model!r}")
    return model.sample(int(m), np.random.default_rng(rng))


def scale_to_snr(noise, clean, snr_db):
    """Rescale ``noise`` so that ``10 log10(||clean||^2 / ||noise||^2) == snr_db``.

    An all-zero noise vector is returned unchanged (the SNR is infinite and
    cannot be lowered by scaling).
    """
    noise = np.asarray(noise, dtype=float)
    clean_norm = np.linalg.norm(clean)
    if clean_norm == 0:
        raise ValueError("clean signal is zero; SNR is undefined")
    noise_norm = np.linalg.norm(noise)
    if noise_norm == 0:
        return noise.copy()
    return noise * (clean_norm / (noise_norm * 10 ** (snr_db / 20)))


def outlier_count(fraction, m):
    """Number of corrupted entries: ``fraction * m`` rounded half away from zero."""
    return int(math.floor(fraction * m + 0.5))


def sparse_outliers(fraction, variance, m, rng):
    """Zero vector with ``outlier_count(fraction, m)`` Gaussian impulses.

    Impulse positions are drawn uniformly without replacement.
    """
    if not 0 <= fraction <= 1:
        raise ValueError(f"outlier fraction must lie in [0, 1], got {fraction}")
    if variance < 0:
        raise ValueError("outlier variance must be nonnegative")
    rng = np.random.default_rng(rng)
    out = np.zeros(int(m))
    k = outlier_count(fraction, m)
    if k:
        idx = rng.choice(int(m), size=k, replace=False)
        out[idx] = math.sqrt(variance) * rng.standard_normal(k)
    return out
