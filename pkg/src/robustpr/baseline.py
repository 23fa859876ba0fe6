"""Classical baselines: Gerchberg-Saxton and Fienup's hybrid input-output."""
from __future__ import annotations

import numpy as np

from .linop import Fourier2DOperator
from .solver import _misfit, _phase, x_step_irls


def gs(y, op, x0, iters, return_misfits=False):
    """Gerchberg-Saxton (error reduction) for a general operator.

    Alternates ``u = exp(j angle(A x))`` with the least-squares fit
    ``x = A^+ (y * u)``. This is the ``p = 2`` member of the AltIRLS family,
    and shares its update code.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x0, dtype=complex)
    if y.shape != (op.m,) or x.shape != (op.n,):
        raise ValueError("y or x0 does not match the operator shape")
    ones = np.ones(op.m)
    ax = op.forward(x)
    misfits = [_misfit(y, ax)]
    for _ in range(int(iters)):
        x = x_step_irls(y, op, _phase(ax), ones)
        ax = op.forward(x)
        misfits.append(_misfit(y, ax))
    if return_misfits:
        return x, misfits
    return x


def project_magnitudes(grid, y_grid):
    """Replace Fourier magnitudes of ``grid`` by ``y_grid``, keeping its phases."""
    spec = np.fft.fft2(grid)
    return np.fft.ifft2(y_grid * _phase(spec))


def hio(y, op2d, support=None, beta=0.9, iters=5000, rng=None, real=True,
        nonnegative=False, x0=None):
    """Hybrid input-output on the oversampled grid of a 2D Fourier operator.

    Parameters
    ----------
    y : ndarray, shape (M,)
        Measured Fourier magnitudes (flattened oversampled grid).
    op2d : Fourier2DOperator
    support : ndarray of bool, optional
        Object support on the padded grid; defaults to the signal window.
        It must lie inside that window.
    beta : float
        Feedback parameter in (0, 1).
    iters : int
        Number of HIO iterations.
    rng : seed or Generator
        Drives the random initial Fourier phases.
    real, nonnegative : bool
        Object-domain constraints applied inside the support.
    x0 : ndarray, optional
        Starting signal. When omitted, the start is the inverse transform of
        the measured magnitudes with uniformly random phases.

    Returns
    -------
    ndarray, shape (N,)
        Final estimate, zero outside the support.
    """
    if not isinstance(op2d, Fourier2DOperator):
        raise TypeError("hio needs a Fourier2DOperator")
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    window = op2d.support()
    support = window if support is None else np.asarray(support, dtype=bool)
    if support.shape != op2d.grid_shape:
        raise ValueError(f"support must have shape {op2d.grid_shape}")
    if not support.any():
        raise ValueError("support must contain at least one pixel")
    if np.any(support & ~window):
        raise ValueError("support must lie inside the signal window")
    y_grid = np.asarray(y, dtype=float).reshape(op2d.grid_shape)
    rng = np.random.default_rng(rng)
    if x0 is None:
        phases = np.exp(2j * np.pi * rng.uniform(size=op2d.grid_shape))
        g = np.fft.ifft2(y_grid * phases)
    else:
        g = op2d.pad(x0)
    if real:
        g = g.real.astype(complex)
    for _ in range(int(iters)):
        gp = project_magnitudes(g, y_grid)
        if real:
            gp = gp.real.astype(complex)
        ok = support
        if nonnegative:
            ok = ok & (gp.real >= 0)
        g = np.where(ok, gp, g - beta * gp)
    out = np.where(support, g, 0)
    if nonnegative:
        out = np.where(out.real >= 0, out, 0)
    return op2d.crop(out)
