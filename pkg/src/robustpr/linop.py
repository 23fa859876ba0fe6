"""Measurement operators for magnitude-only measurements ``y = |A x|``.

Three backends are provided:

* :class:`DenseOperator` wraps an explicit ``M x N`` complex matrix.
* :class:`MaskedDFTOperator` stacks ``K`` blocks ``D diag(mask_k)`` where ``D``
  is the unnormalized ``N``-point DFT (``D D^H = N I``), i.e. coded
  diffraction patterns.
* :class:`Fourier2DOperator` zero-pads a ``rows x cols`` image into the
  top-left corner of a ``(f rows) x (f cols)`` grid and applies the 2D DFT.

All transforms use numpy's unnormalized forward FFT convention
(``exp(-2j pi k n / N)``). Operators are immutable once built.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class MeasurementOperator:
    """Abstract linear map ``x -> A x`` with its conjugate transpose.

    Subclasses implement ``_forward`` and ``_adjoint`` on validated 1D
    arrays. Signals are length-``N`` vectors; image operators flatten in
    row-major order.
    """

    #: if ``A^H A`` is diagonal, its diagonal (length N); otherwise ``None``
    gram_diagonal = None

    def __init__(self, m, n):
        if m < 1 or n < 1:
            raise ValueError(f"operator dimensions must be positive, got {(m, n)}")
        self._shape = (int(m), int(n))

    @property
    def shape(self):
        return self._shape

    @property
    def m(self):
        return self._shape[0]

    @property
    def n(self):
        return self._shape[1]

    def forward(self, x):
        x = np.asarray(x)
        if x.shape != (self.n,):
            raise ValueError(f"expected signal of shape ({self.n},), got {x.shape}")
        return self._forward(x.astype(complex, copy=False))

    def adjoint(self, v):
        v = np.asarray(v)
        if v.shape != (self.m,):
            raise ValueError(f"expected measurement vector of shape ({self.m},), got {v.shape}")
        return self._adjoint(v.astype(complex, copy=False))

    def magnitudes(self, x):
        return np.abs(self.forward(x))

    def _forward(self, x):
        raise NotImplementedError

    def _adjoint(self, v):
        raise NotImplementedError

    @cached_property
    def dense(self):
        """Explicit ``M x N`` matrix, assembled column by column and cached."""
        eye = np.eye(self.n, dtype=complex)
        mat = np.column_stack([self._forward(eye[:, j]) for j in range(self.n)])
        mat.setflags(write=False)
        return mat

    def todense(self):
        return np.array(self.dense)

    @cached_property
    def row_norms_sq(self):
        """Squared Euclidean norms ``||a_m||^2`` of the rows of ``A``."""
        return np.sum(np.abs(self.dense) ** 2, axis=1)

    def rows(self, index):
        """Operator restricted to the measurement rows in ``index``."""
        index = np.asarray(index, dtype=int)
        if index.ndim != 1 or index.size == 0:
            raise ValueError("row index must be a nonempty 1D integer array")
        if index.min() < 0 or index.max() >= self.m:
            raise ValueError("row index out of range")
        return RowSubsetOperator(self, index)

    def __repr__(self):
        return f"{type(self).__name__}(m={self.m}, n={self.n})"


class DenseOperator(MeasurementOperator):
    """Operator backed by an explicit complex matrix."""

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=complex)
        if matrix.ndim != 2:
            raise ValueError("measurement matrix must be two-dimensional")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("measurement matrix has non-finite entries")
        super().__init__(*matrix.shape)
        matrix.setflags(write=False)
        self._matrix = matrix

    @property
    def matrix(self):
        return self._matrix

    @cached_property
    def dense(self):
        return self._matrix

    def _forward(self, x):
        return self._matrix @ x

    def _adjoint(self, v):
        return self._matrix.conj().T @ v

    def rows(self, index):
        index = np.asarray(index, dtype=int)
        if index.ndim != 1 or index.size == 0:
            raise ValueError("row index must be a nonempty 1D integer array")
        return DenseOperator(self._matrix[index])


class RowSubsetOperator(MeasurementOperator):
    """Rows ``index`` of a parent operator, applied through the parent."""

    def __init__(self, parent, index):
        super().__init__(len(index), parent.n)
        self._parent = parent
        self._index = np.array(index)
        self._index.setflags(write=False)

    def _forward(self, x):
        return self._parent._forward(x)[self._index]

    def _adjoint(self, v):
        full = np.zeros(self._parent.m, dtype=complex)
        np.add.at(full, self._index, v)
        return self._parent._adjoint(full)

    @cached_property
    def dense(self):
        return self._parent.dense[self._index]


@dataclass(frozen=True)
class MaskLaw:
    """Distribution of coded-diffraction mask entries ``b1 * b2``.

    ``b1`` is a uniformly random fourth root of unity and ``b2`` a real
    magnitude, drawn independently.
    """

    b1_values: tuple = (1, -1, 1j, -1j)
    b1_probs: tuple = (0.25, 0.25, 0.25, 0.25)
    b2_values: tuple = (np.sqrt(2) / 2, np.sqrt(3))
    b2_probs: tuple = (0.8, 0.2)

    def __post_init__(self):
        for vals, probs in ((self.b1_values, self.b1_probs), (self.b2_values, self.b2_probs)):
            if len(vals) != len(probs):
                raise ValueError("mask law values and probabilities differ in length")
            if np.any(np.asarray(probs) < 0) or not np.isclose(sum(probs), 1.0, rtol=0, atol=1e-12):
                raise ValueError("mask law probabilities must be nonnegative and sum to 1")

    def sample(self, rng, size):
        b1 = rng.choice(np.asarray(self.b1_values, dtype=complex), size=size, p=self.b1_probs)
        b2 = rng.choice(np.asarray(self.b2_values, dtype=float), size=size, p=self.b2_probs)
        return b1 * b2


class MaskedDFTOperator(MeasurementOperator):
    """Coded diffraction patterns: ``A = [D diag(m_1); ...; D diag(m_K)]``.

    Parameters
    ----------
    masks : array_like, shape (K, N)
        Diagonals of the masking matrices.
    """

    def __init__(self, masks):
        masks = np.array(masks, dtype=complex)
        if masks.ndim != 2:
            raise ValueError("masks must have shape (K, N)")
        if not np.all(np.isfinite(masks)):
            raise ValueError("masks have non-finite entries")
        k, n = masks.shape
        super().__init__(k * n, n)
        masks.setflags(write=False)
        self._masks = masks
        gram = n * np.sum(np.abs(masks) ** 2, axis=0)
        gram.setflags(write=False)
        self.gram_diagonal = gram

    @property
    def masks(self):
        return self._masks

    @property
    def n_masks(self):
        return self._masks.shape[0]

    def _forward(self, x):
        return np.fft.fft(self._masks * x[None, :], axis=1).ravel()

    def _adjoint(self, v):
        blocks = v.reshape(self._masks.shape)
        # D^H w = N * ifft(w) for the unnormalized DFT
        back = self.n * np.fft.ifft(blocks, axis=1)
        return np.sum(self._masks.conj() * back, axis=0)

    @cached_property
    def row_norms_sq(self):
        return np.repeat(np.sum(np.abs(self._masks) ** 2, axis=1), self.n)


class Fourier2DOperator(MeasurementOperator):
    """Zero-padded 2D DFT of a ``rows x cols`` image.

    The image sits in the top-left corner of a ``(factor*rows) x
    (factor*cols)`` grid. Measurements are the flattened (row-major) 2D
    DFT of that grid, so ``M = factor**2 * rows * cols``.
    """

    def __init__(self, rows, cols, factor=2):
        if int(rows) != rows or int(cols) != cols or rows < 1 or cols < 1:
            raise ValueError("rows and cols must be positive integers")
        if int(factor) != factor or factor < 1:
            raise ValueError("oversampling factor must be an integer >= 1")
        self.rows, self.cols, self.factor = int(rows), int(cols), int(factor)
        self.grid_shape = (self.factor * self.rows, self.factor * self.cols)
        super().__init__(self.grid_shape[0] * self.grid_shape[1], self.rows * self.cols)
        # columns of a padded DFT are orthogonal with squared norm P*Q
        gram = np.full(self.n, float(self.m))
        gram.setflags(write=False)
        self.gram_diagonal = gram

    @property
    def signal_shape(self):
        return (self.rows, self.cols)

    def pad(self, x):
        """Embed a signal vector (or image) into the oversampled grid."""
        grid = np.zeros(self.grid_shape, dtype=complex)
        grid[: self.rows, : self.cols] = np.reshape(x, self.signal_shape)
        return grid

    def crop(self, grid):
        """Extract the signal window of a padded grid as a flat vector."""
        return np.asarray(grid)[: self.rows, : self.cols].ravel()

    def support(self):
        """Boolean grid marking the signal window inside the padded grid."""
        mask = np.zeros(self.grid_shape, dtype=bool)
        mask[: self.rows, : self.cols] = True
        return mask

    def _forward(self, x):
        return np.fft.fft2(self.pad(x)).ravel()

    def _adjoint(self, v):
        grid = self.m * np.fft.ifft2(v.reshape(self.grid_shape))
        return self.crop(grid)

    @cached_property
    def row_norms_sq(self):
        return np.full(self.m, float(self.n))


def make_dense(matrix):
    """Dense operator with ``forward(x) = matrix @ x``."""
    return DenseOperator(matrix)


def make_masked_dft(n, k, rng=None, law=None):
    """Coded-diffraction operator with ``k`` random masks of length ``n``.

    Mask entries are drawn once, i.i.d. from ``law`` (default
    :class:`MaskLaw`), so the operator is reproducible from the generator
    seed.
    """
    if int(n) != n or n < 1 or int(k) != k or k < 1:
        raise ValueError("n and k must be positive integers")
    rng = np.random.default_rng(rng)
    law = law if law is not None else MaskLaw()
    return MaskedDFTOperator(law.sample(rng, (int(k), int(n))))


def make_fourier2d(rows, cols, factor=2):
    return Fourier2DOperator(rows, cols, factor)


def forward(op, x):
    return op.forward(x)


def adjoint(op, v):
    return op.adjoint(v)


def magnitudes(op, x):
    return op.magnitudes(x)
