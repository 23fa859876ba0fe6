"""Robust phase retrieval by inexact alternating minimization.

The estimator solves

    min_{|u| = 1, x}  sum_m (|y_m u_m - a_m^H x|^2 + eps)^(p/2)

by alternating an exact phase update for ``u`` with a majorization step for
``x``. The majorizer comes from the variational identity

    (r^2 + eps)^(p/2) = min_{w >= 0}  w r^2 + phi_p(w),

which turns the ``x`` block into a weighted least-squares problem. Solving
that problem exactly gives AltIRLS; replacing it by a single gradient step
gives AltGD (optionally with Nesterov extrapolation or block updates).

Gradient convention: for ``f(x) = ||W (y*u) - W A x||^2`` we return
``A^H W^2 (A x - y*u)``, the derivative with respect to ``conj(x)``. The
directional derivative of ``f`` along ``d`` is ``2 Re<grad, d>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

VARIANTS = ("irls", "gd", "gd_accel", "gd_block")
STEP_RULES = ("trace_heuristic", "leading_eigenvalue")
SCHEDULES = ("cyclic", "random")


class RankDeficientError(np.linalg.LinAlgError):
    """The weighted least-squares system is numerically rank deficient."""

    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


@dataclass(frozen=True)
class SolverConfig:
    """Settings shared by all alternating solvers.

    Parameters
    ----------
    p : float
        Fitting exponent in (0, 2]. ``p = 2`` is plain least squares.
    eps : float
        Smoothing constant; must be positive when ``p < 2``.
    max_iters : int
        Cap on outer iterations.
    rel_tol : float
        Relative change of the magnitude misfit ``||y - |Ax|||^2`` that
        declares convergence.
    variant : str
        One of ``irls``, ``gd``, ``gd_accel``, ``gd_block``.
    step_rule : str
        ``trace_heuristic`` (``mu = sum(w)``) or ``leading_eigenvalue``
        (``mu = lambda_max(A^H W^2 A)``) for gradient variants.
    block_size : int, optional
        Rows per block for ``gd_block``. Must exceed one.
    schedule : str
        ``cyclic`` (block incremental) or ``random`` (stochastic).
    restart : bool
        Reset the extrapolation whenever the cost increases (``gd_accel``).
    seed : int
        Seed for the random block schedule.
    """

    p: float = 1.3
    eps: float = 1e-6
    max_iters: int = 1000
    rel_tol: float = 1e-7
    variant: str = "irls"
    step_rule: str = "trace_heuristic"
    block_size: Optional[int] = None
    schedule: str = "cyclic"
    restart: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.p <= 2:
            raise ValueError(f"p must lie in (0, 2], got {self.p}")
        if self.eps < 0 or (self.p < 2 and not self.eps > 0):
            raise ValueError(f"eps must be positive when p < 2, got {self.eps}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"unknown step rule {self.step_rule!r}; expected one of {STEP_RULES}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}; expected one of {SCHEDULES}")
        if self.variant == "gd_block":
            if self.block_size is None or int(self.block_size) != self.block_size or self.block_size <= 1:
                raise ValueError("gd_block needs an integer block_size > 1")


@dataclass
class SolverTrace:
    """Per-iteration history of a solver run."""

    costs: list = field(default_factory=list)
    misfits: list = field(default_factory=list)
    initial_cost: float = float("nan")
    reason: str = ""
    restarts: int = 0

    @property
    def n_iter(self):
        return len(self.costs)


def _phase(z):
    """Unit-modulus phase of ``z``; entries with ``z == 0`` map to 1."""
    mag = np.abs(z)
    out = np.ones_like(z, dtype=complex)
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return out


def _lp_sum(resid_sq, p, eps):
    return float(np.sum((resid_sq + eps) ** (p / 2)))


def _weights(resid_sq, p, eps):
    if p == 2:
        return np.ones_like(resid_sq, dtype=float)
    return (p / 2) * (resid_sq + eps) ** ((p - 2) / 2)


def _misfit(y, ax):
    return float(np.sum((y - np.abs(ax)) ** 2))


def cost(y, op, x, u, p, eps):
    """Smoothed l_p fitting cost ``sum_m (|y_m u_m - a_m^H x|^2 + eps)^(p/2)``."""
    y = np.asarray(y, dtype=float)
    u = np.asarray(u)
    if y.shape != (op.m,) or u.shape != (op.m,):
        raise ValueError(f"y and u must have shape ({op.m},)")
    resid = y * u - op.forward(x)
    return _lp_sum(np.abs(resid) ** 2, p, eps)


def majorizer_weight(residual_sq, p, eps):
    """Weight ``(p/2) (r^2 + eps)^((p-2)/2)`` at which the quadratic majorizer is tight.

    It is the unique minimizer over ``w >= 0`` of ``w r^2 + phi_p(w)``.
    """
    if not 0 < p < 2:
        raise ValueError(f"p must lie in (0, 2), got {p}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return _weights(np.asarray(residual_sq, dtype=float), p, eps)


def majorizer_offset(w, p, eps):
    """``phi_p(w) = (2-p)/2 ((2/p) w)^(p/(p-2)) + eps w``."""
    w = np.asarray(w, dtype=float)
    return (2 - p) / 2 * ((2 / p) * w) ** (p / (p - 2)) + eps * w


def x_step_irls(y, op, u, w):
    """Exact minimizer of ``||W (y*u) - W A x||^2`` with ``W = diag(sqrt(w))``.

    Solved through a QR factorization of the weighted system. When the
    weights are constant and ``A^H A`` is diagonal, the solution reduces to
    a scaled adjoint and no factorization is needed.
    """
    w = np.asarray(w, dtype=float)
    b = np.asarray(y, dtype=float) * np.asarray(u)
    if w.shape != (op.m,) or b.shape != (op.m,):
        raise ValueError(f"y, u and w must have shape ({op.m},)")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be positive and finite")
    if op.gram_diagonal is not None and np.all(w == w[0]):
        return op.adjoint(b) / op.gram_diagonal
    if op.m < op.n:
        raise RankDeficientError(f"{op.m} measurements cannot determine {op.n} unknowns", np.inf)
    s = np.sqrt(w)
    q, r = np.linalg.qr(s[:, None] * op.dense)
    diag = np.abs(np.diag(r))
    condition = diag.max() / diag.min() if diag.min() > 0 else np.inf
    if condition * np.finfo(float).eps * max(op.shape) > 1:
        raise RankDeficientError(
            f"weighted system is rank deficient (condition estimate {condition:.3g})", condition
        )
    return solve_triangular(r, q.conj().T @ (s * b))


def u_step(y, op, x):
    """Optimal unit-modulus update ``u_m = exp(j angle(a_m^H x))`` (1 where ``a_m^H x = 0``)."""
    return _phase(op.forward(x))


def gradient(y, op, x, u, w):
    """``A^H W^2 (A x - y*u)``, evaluated with two operator applications."""
    resid = op.forward(x) - np.asarray(y, dtype=float) * np.asarray(u)
    return op.adjoint(np.asarray(w, dtype=float) * resid)


_POWER_START_SEED = 20161004


def leading_eigenvalue(op, w, tol=1e-6, max_iter=200):
    """Largest eigenvalue of ``A^H diag(w) A`` by power iteration."""
    w = np.asarray(w, dtype=float)
    rng = np.random.default_rng(_POWER_START_SEED)
    v = rng.standard_normal(op.n) + 1j * rng.standard_normal(op.n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        bv = op.adjoint(w * op.forward(v))
        lam_new = float(np.real(np.vdot(v, bv)))
        nrm = np.linalg.norm(bv)
        if nrm == 0:
            return 0.0
        v = bv / nrm
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        lam = lam_new
    return lam


def step_size(op, w, rule="trace_heuristic"):
    """Inverse step ``mu`` for the gradient update ``x - grad / mu``.

    ``trace_heuristic`` returns ``trace(W^2) = sum(w)``; ``leading_eigenvalue``
    returns ``lambda_max(A^H W^2 A)``, for which the quadratic surrogate
    majorizes the weighted least-squares cost.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if rule == "trace_heuristic":
        return float(np.sum(w))
    if rule == "leading_eigenvalue":
        return leading_eigenvalue(op, w)
    raise ValueError(f"unknown step rule {rule!r}")


def misfit(y, op, x):
    """Magnitude misfit ``||y - |A x|||^2``."""
    return _misfit(np.asarray(y, dtype=float), op.forward(x))


def _converged(prev, curr, rel_tol):
    if prev == 0:
        return True
    return abs(curr - prev) / prev <= rel_tol


def stopping(y, op, x_prev, x_curr, rel_tol=1e-7):
    """True when the relative change of ``||y - |Ax|||^2`` is at most ``rel_tol``.

    A zero previous misfit (perfect fit) counts as converged.
    """
    return _converged(misfit(y, op, x_prev), misfit(y, op, x_curr), rel_tol)


class _Run:
    """Bookkeeping shared by the solver loops."""

    def __init__(self, y, op, x0, config):
        self.y = np.asarray(y, dtype=float)
        if self.y.shape != (op.m,):
            raise ValueError(f"y must have shape ({op.m},), got {self.y.shape}")
        x0 = np.asarray(x0)
        if x0.shape != (op.n,):
            raise ValueError(f"x0 must have shape ({op.n},), got {x0.shape}")
        if not np.all(np.isfinite(x0)):
            raise ValueError("x0 has non-finite entries")
        self.op = op
        self.cfg = config if config is not None else SolverConfig()
        self.trace = SolverTrace()
        self.x = x0.astype(complex)
        self.ax = op.forward(self.x)
        self.prev_misfit = _misfit(self.y, self.ax)
        self.trace.initial_cost = self.cost_of(self.ax)

    def cost_of(self, ax):
        # with u aligned to Ax the residual modulus is |y - |Ax||
        return _lp_sum((self.y - np.abs(ax)) ** 2, self.cfg.p, self.cfg.eps)

    def record(self, x, ax):
        """Accept an iterate; return True when the stopping rule fires."""
        self.x, self.ax = x, ax
        c = self.cost_of(ax)
        mis = _misfit(self.y, ax)
        self.trace.costs.append(c)
        self.trace.misfits.append(mis)
        done = _converged(self.prev_misfit, mis, self.cfg.rel_tol)
        self.prev_misfit = mis
        if done:
            self.trace.reason = "tolerance"
        elif self.trace.n_iter >= self.cfg.max_iters:
            self.trace.reason = "max_iters"
            done = True
        return done

    def weights(self, ax, u):
        resid_sq = np.abs(self.y * u - ax) ** 2
        return _weights(resid_sq, self.cfg.p, self.cfg.eps)


def _check_variant(config, *allowed):
    if config is not None and config.variant not in allowed:
        return replace(config, variant=allowed[0])
    return config if config is not None else SolverConfig(variant=allowed[0])


def alt_irls(y, op, x0, config=None):
    """AltIRLS: alternate the phase update with an exact weighted LS step.

    Each outer iteration computes ``x`` from the previous ``(u, w)``, then
    refreshes ``u`` and the weights from the new ``x``.

    Returns
    -------
    x : ndarray
        Final estimate.
    trace : SolverTrace
        Cost after every iteration and the termination reason.
    """
    cfg = _check_variant(config, "irls")
    run = _Run(y, op, x0, cfg)
    u = _phase(run.ax)
    w = run.weights(run.ax, u)
    while True:
        x = x_step_irls(run.y, op, u, w)
        ax = op.forward(x)
        u = _phase(ax)
        w = run.weights(ax, u)
        if run.record(x, ax):
            return run.x, run.trace


def _gd_step(run, x, ax, op=None):
    """One alternating gradient step from ``x`` (with ``ax = A x``)."""
    op = op if op is not None else run.op
    u = _phase(ax)
    w = run.weights(ax, u)
    mu = step_size(op, w, run.cfg.step_rule)
    grad = op.adjoint(w * (ax - run.y * u))
    return x - grad / mu


def alt_gd(y, op, x0, config=None):
    """AltGD: alternate the phase update with one majorized gradient step."""
    cfg = _check_variant(config, "gd")
    run = _Run(y, op, x0, cfg)
    while True:
        x = _gd_step(run, run.x, run.ax)
        if run.record(x, op.forward(x)):
            return run.x, run.trace


def nesterov_sequence(n):
    """First ``n`` terms of ``t_0 = 1``, ``t_r = (1 + sqrt(1 + 4 t_{r-1}^2)) / 2``."""
    t = [1.0]
    while len(t) < n:
        t.append((1 + math.sqrt(1 + 4 * t[-1] ** 2)) / 2)
    return t[:n]


def alt_gd_accel(y, op, x0, config=None):
    """AltGD with Nesterov extrapolation.

    The gradient step (including the phase and weight refresh) is taken
    from ``z = x + ((t_prev - 1) / t) (x - x_prev)``. With ``restart``
    enabled, a step that raises the cost is discarded and replaced by a
    plain step from ``x`` with the momentum reset to ``t = 1``.
    """
    cfg = _check_variant(config, "gd_accel")
    run = _Run(y, op, x0, cfg)
    x_prev = run.x
    t_prev = 1.0
    cost_prev = run.trace.initial_cost
    while True:
        x = run.x
        t = (1 + math.sqrt(1 + 4 * t_prev**2)) / 2
        coef = (t_prev - 1) / t
        if coef == 0:
            z, az = x, run.ax
        else:
            z = x + coef * (x - x_prev)
            az = op.forward(z)
        x_new = _gd_step(run, z, az)
        ax_new = op.forward(x_new)
        if cfg.restart and coef != 0 and run.cost_of(ax_new) > cost_prev:
            run.trace.restarts += 1
            t = 1.0
            x_new = _gd_step(run, x, run.ax)
            ax_new = op.forward(x_new)
        x_prev, t_prev = x, t
        if run.record(x_new, ax_new):
            return run.x, run.trace
        cost_prev = run.trace.costs[-1]


def block_partition(m, block_size):
    """Contiguous blocks of ``block_size`` rows; a trailing singleton joins its neighbour."""
    if block_size <= 1:
        raise ValueError("block_size must exceed one to keep the reweighting robust")
    starts = list(range(0, m, block_size))
    blocks = [np.arange(s, min(s + block_size, m)) for s in starts]
    if len(blocks) > 1 and blocks[-1].size == 1:
        last = blocks.pop()
        blocks[-1] = np.concatenate([blocks[-1], last])
    return blocks


def alt_gd_block(y, op, x0, config=None):
    """Block incremental (``cyclic``) or stochastic (``random``) AltGD.

    One outer iteration visits ``L`` blocks, where ``L`` is the number of
    blocks in the partition; the random schedule draws them uniformly with
    replacement from a generator seeded by ``config.seed``.
    """
    cfg = _check_variant(config, "gd_block")
    if cfg.block_size is None or cfg.block_size <= 1:
        raise ValueError("gd_block needs block_size > 1")
    run = _Run(y, op, x0, cfg)
    blocks = block_partition(op.m, cfg.block_size)
    if len(blocks) == 1:
        subops, subys = [op], [run.y]
    else:
        subops = [op.rows(b) for b in blocks]
        subys = [run.y[b] for b in blocks]
    rng = np.random.default_rng(cfg.seed)
    n_blocks = len(blocks)
    while True:
        if cfg.schedule == "cyclic":
            order = range(n_blocks)
        else:
            order = rng.integers(0, n_blocks, size=n_blocks)
        x = run.x
        for l in order:
            sub, ys = subops[l], subys[l]
            ax = sub.forward(x)
            u = _phase(ax)
            w = _weights(np.abs(ys * u - ax) ** 2, cfg.p, cfg.eps)
            mu = step_size(sub, w, cfg.step_rule)
            x = x - sub.adjoint(w * (ax - ys * u)) / mu
        if run.record(x, op.forward(x)):
            return run.x, run.trace


_DISPATCH = {
    "irls": alt_irls,
    "gd": alt_gd,
    "gd_accel": alt_gd_accel,
    "gd_block": alt_gd_block,
}


def solve(y, op, x0, config):
    """Run the solver selected by ``config.variant``."""
    return _DISPATCH[config.variant](y, op, x0, config)


def spectral_init(y, op, rng=None, max_iter=100, tol=1e-8):
    """Principal eigenvector of ``sum_m y_m^2 a_m a_m^H`` by power iteration.

    The unit eigenvector is scaled by ``sqrt(mean(y^2))``, which matches the
    signal norm when ``A^H A`` is close to ``M I``.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (op.m,):
        raise ValueError(f"y must have shape ({op.m},), got {y.shape}")
    if op.m < op.n:
        raise ValueError("spectral initialization needs at least as many measurements as unknowns")
    y2 = y**2
    if not np.any(y2 > 0):
        raise ValueError("all measurements are zero; no spectral direction exists")
    rng = np.random.default_rng(rng)
    v = rng.standard_normal(op.n) + 1j * rng.standard_normal(op.n)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        bv = op.adjoint(y2 * op.forward(v))
        bv /= np.linalg.norm(bv)
        change = np.linalg.norm(bv - v)
        v = bv
        if change < tol:
            break
    return math.sqrt(float(np.mean(y2))) * v


STAGE_ITERS = 100


def staged_schedule(target_p):
    """Intermediate exponents used to warm-start a run at ``target_p``.

    ``0.6 < p < 1`` stages through 1.3 then 1.0; ``p <= 0.6`` adds 0.7.
    No staging is needed for ``p >= 1``.
    """
    if target_p >= 1:
        return []
    if target_p > 0.6:
        return [1.3, 1.0]
    return [1.3, 1.0, 0.7]


def staged_p_init(y, op, target_p, rng=None, config=None, iters=STAGE_ITERS, x0=None):
    """Spectral start refined by fixed-length runs at decreasing ``p``.

    Each stage runs exactly ``iters`` iterations of the variant in
    ``config`` (AltIRLS by default) with ``p`` replaced by the stage value.
    """
    base = config if config is not None else SolverConfig()
    x = spectral_init(y, op, rng) if x0 is None else np.asarray(x0, dtype=complex)
    for p in staged_schedule(target_p):
        cfg = replace(base, p=p, max_iters=iters, rel_tol=-1.0)
        x, _ = solve(y, op, x, cfg)
    return x
