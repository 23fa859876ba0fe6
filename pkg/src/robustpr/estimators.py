"""Scikit-learn style wrappers around the alternating solvers.

The "design matrix" passed to ``fit`` is the measurement operator (a dense
``(M, N)`` array or any :class:`~robustpr.linop.MeasurementOperator`), and
the target is the vector of measured magnitudes. After fitting, ``coef_``
holds the recovered signal, defined up to a global phase.

>>> import numpy as np
>>> from robustpr import AltIRLS, make_masked_dft
>>> rng = np.random.default_rng(0)
>>> op = make_masked_dft(16, 8, rng)
>>> x = np.exp(1j * rng.uniform(0, 2 * np.pi, 16))
>>> est = AltIRLS(p=1.3, random_state=0).fit(op, np.abs(op.forward(x)))
>>> bool(np.allclose(est.predict(op), np.abs(op.forward(x)), atol=1e-6))
True
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_operator, check_magnitudes, check_signal
from .solver import SolverConfig, solve, spectral_init, staged_p_init


class _AltMinBase(RegressorMixin, BaseEstimator):
    """Shared ``fit``/``predict`` logic; subclasses supply :meth:`_config`."""

    def _config(self):
        raise NotImplementedError

    def _initial(self, y, op, x0, rng):
        if x0 is not None:
            return check_signal(x0, op)
        if self.init == "spectral":
            return spectral_init(y, op, rng)
        if self.init == "staged":
            return staged_p_init(y, op, self.p, rng=rng, config=self._config())
        raise ValueError(f"init must be 'spectral' or 'staged', got {self.init!r}")

    def fit(self, A, y, x0=None):
        """Recover the signal from magnitudes ``y ~ |A x|``.

        Parameters
        ----------
        A : ndarray of shape (M, N) or MeasurementOperator
        y : array-like of shape (M,)
            Measured magnitudes.
        x0 : array-like of shape (N,), optional
            Starting point. Overrides ``init``.

        Returns
        -------
        self
        """
        op = as_operator(A)
        y = check_magnitudes(y, op)
        cfg = self._config()
        rng = np.random.default_rng(self.random_state)
        start = self._initial(y, op, x0, rng)
        x, trace = solve(y, op, start, cfg)
        self.coef_ = x
        self.trace_ = trace
        self.n_iter_ = trace.n_iter
        self.n_features_in_ = op.n
        return self

    def predict(self, A):
        """Predicted magnitudes ``|A coef_|``."""
        check_is_fitted(self, "coef_")
        op = as_operator(A)
        if op.n != self.coef_.size:
            raise ValueError(f"A has {op.n} columns, the fitted signal has {self.coef_.size}")
        return np.abs(op.forward(self.coef_))


class AltIRLS(_AltMinBase):
    """Alternating IRLS for l_p-fitting phase retrieval.

    Parameters
    ----------
    p : float, default 1.3
        Fitting exponent in (0, 2]. Values near 1 suit Laplacian noise,
        smaller values suit sparse gross outliers.
    eps : float, default 1e-6
    max_iter : int, default 1000
    tol : float, default 1e-7
        Relative misfit change that stops the iterations.
    init : {'spectral', 'staged'}, default 'spectral'
        ``staged`` warm-starts ``p < 1`` through larger exponents.
    random_state : int, Generator or None
        Seeds the spectral initialization.

    Attributes
    ----------
    coef_ : ndarray of shape (N,)
    trace_ : SolverTrace
    n_iter_ : int
    """

    def __init__(self, p=1.3, eps=1e-6, max_iter=1000, tol=1e-7, init="spectral", random_state=None):
        self.p = p
        self.eps = eps
        self.max_iter = max_iter
        self.tol = tol
        self.init = init
        self.random_state = random_state

    def _config(self):
        return SolverConfig(p=self.p, eps=self.eps, max_iters=self.max_iter, rel_tol=self.tol,
                            variant="irls")


class AltGD(_AltMinBase):
    """Alternating gradient descent, optionally accelerated or block-wise.

    Parameters
    ----------
    p, eps, max_iter, tol, init, random_state
        As in :class:`AltIRLS`.
    accelerate : bool, default False
        Nesterov extrapolation.
    restart : bool, default True
        Reset the extrapolation when the cost goes up.
    step_rule : {'trace_heuristic', 'leading_eigenvalue'}
    block_size : int, optional
        Use block updates with this many rows per block.
    schedule : {'cyclic', 'random'}
        Block visiting order.
    """

    def __init__(self, p=1.3, eps=1e-6, max_iter=1000, tol=1e-7, accelerate=False, restart=True,
                 step_rule="trace_heuristic", block_size=None, schedule="cyclic", init="spectral",
                 random_state=None):
        self.p = p
        self.eps = eps
        self.max_iter = max_iter
        self.tol = tol
        self.accelerate = accelerate
        self.restart = restart
        self.step_rule = step_rule
        self.block_size = block_size
        self.schedule = schedule
        self.init = init
        self.random_state = random_state

    def _config(self):
        if self.block_size is not None and self.accelerate:
            raise ValueError("block updates and acceleration cannot be combined")
        variant = "gd_block" if self.block_size is not None else ("gd_accel" if self.accelerate else "gd")
        seed = self.random_state if isinstance(self.random_state, (int, np.integer)) else 0
        return SolverConfig(p=self.p, eps=self.eps, max_iters=self.max_iter, rel_tol=self.tol,
                            variant=variant, step_rule=self.step_rule, block_size=self.block_size,
                            schedule=self.schedule, restart=self.restart, seed=int(seed))


class GerchbergSaxton(_AltMinBase):
    """Gerchberg-Saxton, the least-squares (``p = 2``) special case."""

    p = 2.0

    def __init__(self, max_iter=1000, tol=1e-7, init="spectral", random_state=None):
        self.max_iter = max_iter
        self.tol = tol
        self.init = init
        self.random_state = random_state

    def _config(self):
        return SolverConfig(p=2.0, eps=0.0, max_iters=self.max_iter, rel_tol=self.tol, variant="irls")
