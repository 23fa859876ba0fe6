"""Fisher information and Cramer-Rao bounds for ``y = |A x| + n``.

Parameters are stacked as ``beta = [Re x; Im x]`` (complex signals),
``beta = x`` (real signals) or ``beta = [|x|; angle x]`` (amplitude/phase).
For Laplacian noise of variance ``sigma2`` the FIM is

    F = (2 / sigma2) G diag(|A x|^-2) G^T

with ``G`` depending on the parameterization. Gaussian noise of the same
variance halves the information, so its bound is exactly twice as large.

The complex and amplitude/phase FIMs are singular (global phase), with a
single null direction; their bounds use the pseudo-inverse.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: singular values below this fraction of the largest are treated as zero
RANK_RTOL = 1e-10
#: smallest admissible |a_m^H x| (and |x_i| for amplitude/phase)
MIN_MODULUS = 1e-12

PARAMETERIZATIONS = ("cartesian_complex", "cartesian_real", "amplitude_phase")


class DegenerateMeasurementError(ValueError):
    """The FIM is undefined because some ``a_m^H x`` (or ``x_i``) vanishes."""

    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class RankError(np.linalg.LinAlgError):
    """The FIM rank differs from the value implied by the model."""

    def __init__(self, message, rank, expected):
        super().__init__(message)
        self.rank = rank
        self.expected = expected


@dataclass(frozen=True)
class FimMatrix:
    matrix: np.ndarray
    parameterization: str
    sigma2: float

    @property
    def n_signal(self):
        """Signal length ``N`` implied by the matrix size."""
        k = self.matrix.shape[0]
        return k if self.parameterization == "cartesian_real" else k // 2

    @property
    def expected_rank(self):
        if self.parameterization == "cartesian_real":
            return self.n_signal
        return 2 * self.n_signal - 1


@dataclass(frozen=True)
class CrbReport:
    """Bound on the total error variance and its per-parameter split."""

    bound_total: float
    per_parameter: np.ndarray
    rank: int
    parameterization: str
    noise: str

    @property
    def amplitude_bound(self):
        if self.parameterization != "amplitude_phase":
            raise AttributeError("amplitude bound needs the amplitude_phase parameterization")
        n = self.per_parameter.size // 2
        return float(np.sum(self.per_parameter[:n]))

    @property
    def phase_bound(self):
        if self.parameterization != "amplitude_phase":
            raise AttributeError("phase bound needs the amplitude_phase parameterization")
        n = self.per_parameter.size // 2
        return float(np.sum(self.per_parameter[n:]))


def _check_sigma2(sigma2):
    if not sigma2 > 0:
        raise ValueError(f"noise variance must be positive, got {sigma2}")


def _measurements(op, x):
    x = np.asarray(x)
    a = op.dense
    z = a @ x.astype(complex)
    mod = np.abs(z)
    bad = np.flatnonzero(mod <= MIN_MODULUS)
    if bad.size:
        raise DegenerateMeasurementError(
            f"|a_m^H x| vanishes at measurement {bad[0]}; the FIM is undefined there", int(bad[0])
        )
    return a, z, mod


def _assemble(g, mod, sigma2, parameterization):
    scaled = g / mod[None, :] ** 2
    f = (2.0 / sigma2) * (scaled @ g.T)
    f = 0.5 * (f + f.T)
    return FimMatrix(matrix=f, parameterization=parameterization, sigma2=float(sigma2))


def fim_laplacian_complex(op, x, sigma2):
    """FIM of ``[Re x; Im x]`` under Laplacian noise of variance ``sigma2``."""
    _check_sigma2(sigma2)
    a, z, mod = _measurements(op, x)
    c = a.conj().T * z[None, :]
    g = np.vstack([c.real, c.imag])
    return _assemble(g, mod, sigma2, "cartesian_complex")


def fim_laplacian_real(op, x, sigma2):
    """FIM of a real signal ``x`` under Laplacian noise."""
    _check_sigma2(sigma2)
    x = np.asarray(x)
    if np.iscomplexobj(x):
        if np.any(np.abs(x.imag) > 0):
            raise ValueError("fim_laplacian_real needs a real-valued signal")
        x = x.real
    a, z, mod = _measurements(op, x)
    g = (a.conj().T * z[None, :]).real
    return _assemble(g, mod, sigma2, "cartesian_real")


def fim_amplitude_phase(op, x, sigma2):
    """FIM of ``[|x|; angle(x)]`` under Laplacian noise."""
    _check_sigma2(sigma2)
    x = np.asarray(x, dtype=complex)
    amp = np.abs(x)
    bad = np.flatnonzero(amp <= MIN_MODULUS)
    if bad.size:
        raise DegenerateMeasurementError(
            f"signal entry {bad[0]} is zero; its phase is not identifiable", int(bad[0])
        )
    a, z, mod = _measurements(op, x)
    c = x.conj()[:, None] * a.conj().T * z[None, :]
    g = np.vstack([c.real / amp[:, None], c.imag])
    return _assemble(g, mod, sigma2, "amplitude_phase")


def rank_diagnostics(fim, rtol=RANK_RTOL):
    """Numerical rank of the FIM and an orthonormal basis of its null space.

    Returns
    -------
    rank : int
    null_basis : ndarray, shape (K, K - rank)
    """
    mat = fim.matrix if isinstance(fim, FimMatrix) else np.asarray(fim)
    _, s, vh = np.linalg.svd(mat)
    if s.size == 0 or s[0] == 0:
        return 0, vh.conj().T
    rank = int(np.sum(s >= rtol * s[0]))
    return rank, vh[rank:].conj().T


def _pinv_diag(mat, rank):
    u, s, vh = np.linalg.svd(mat)
    inv = np.zeros_like(s)
    inv[:rank] = 1.0 / s[:rank]
    return np.einsum("ki,i,ik->k", vh.conj().T, inv, u.conj().T).real


def crb_laplacian(fim):
    """Trace of the (pseudo-)inverse FIM, with per-parameter diagonal.

    Raises :class:`RankError` when the numerical rank is not ``2N - 1``
    (complex and amplitude/phase) or ``N`` (real).
    """
    rank, _ = rank_diagnostics(fim)
    expected = fim.expected_rank
    if rank != expected:
        raise RankError(
            f"{fim.parameterization} FIM has numerical rank {rank}, expected {expected}",
            rank, expected,
        )
    if fim.parameterization == "cartesian_real":
        d = np.diag(np.linalg.inv(fim.matrix)).copy()
    else:
        d = _pinv_diag(fim.matrix, rank)
    d.setflags(write=False)
    return CrbReport(
        bound_total=float(np.sum(d)), per_parameter=d, rank=rank,
        parameterization=fim.parameterization, noise="laplacian",
    )


def crb_gaussian(report):
    """Gaussian-noise bound: twice the Laplacian bound at equal noise variance.

    Accepts a Laplacian :class:`CrbReport` or the Laplacian FIM itself.
    """
    if isinstance(report, FimMatrix):
        report = crb_laplacian(report)
    if report.noise != "laplacian":
        raise ValueError("crb_gaussian expects a Laplacian report")
    d = 2.0 * report.per_parameter
    d.setflags(write=False)
    return CrbReport(
        bound_total=2.0 * report.bound_total, per_parameter=d, rank=report.rank,
        parameterization=report.parameterization, noise="gaussian",
    )
