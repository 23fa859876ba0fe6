import numpy as np
import pytest

from robustpr.baseline import gs, hio, project_magnitudes
from robustpr.linop import make_dense, make_fourier2d, make_masked_dft
from robustpr.metrics import aligned_error
from robustpr.solver import spectral_init

from helpers import crandn


def test_gs_fixed_point(rng):
    op = make_masked_dft(8, 4, rng)
    x = crandn(rng, 8)
    xh = gs(np.abs(op.forward(x)), op, x, 10)
    assert aligned_error(xh, x) <= 1e-20 + 1e-12 * np.linalg.norm(x) ** 2


def test_gs_misfit_monotone():
    for seed in range(100):
        r = np.random.default_rng(seed)
        op = make_masked_dft(8, 4, r)
        x = crandn(r, 8)
        y = np.abs(op.forward(x))
        _, mis = gs(y, op, spectral_init(y, op, r), 30, return_misfits=True)
        assert np.all(np.diff(mis) <= 1e-12 * np.asarray(mis[:-1]))


def test_gs_errors(rng):
    a = crandn(rng, 6, 3)
    a[:, 1] = a[:, 0]
    with pytest.raises(np.linalg.LinAlgError):
        gs(np.ones(6), make_dense(a), np.ones(3), 2)
    with pytest.raises(ValueError):
        gs(np.ones(5), make_dense(crandn(rng, 6, 3)), np.ones(3), 2)


def test_magnitude_projection_is_exact(rng):
    grid = crandn(rng, 8, 8)
    y = np.abs(rng.standard_normal((8, 8)))
    np.testing.assert_allclose(np.abs(np.fft.fft2(project_magnitudes(grid, y))), y, atol=1e-12)


def test_hio_truth_is_fixed_point(rng):
    op = make_fourier2d(6, 6, 2)
    x = rng.standard_normal(36)
    xh = hio(np.abs(op.forward(x)), op, iters=50, x0=x)
    np.testing.assert_allclose(xh, x, atol=1e-10)


def test_hio_zero_outside_support(rng):
    op = make_fourier2d(6, 6, 2)
    x = rng.standard_normal(36)
    support = op.support().copy()
    support[:6, 4:6] = False
    xh = hio(np.abs(op.forward(x)), op, support=support, iters=30, rng=1)
    assert np.all(op.pad(xh)[~support] == 0)
    assert np.all(np.isfinite(xh))


def test_hio_validation(rng):
    op = make_fourier2d(4, 4, 2)
    y = np.ones(op.m)
    with pytest.raises(TypeError):
        hio(np.ones(8), make_masked_dft(4, 2, rng))
    with pytest.raises(ValueError):
        hio(y, op, beta=1.5)
    with pytest.raises(ValueError):
        hio(y, op, support=np.zeros(op.grid_shape, dtype=bool))
    with pytest.raises(ValueError):
        hio(y, op, support=np.ones(op.grid_shape, dtype=bool))
    with pytest.raises(ValueError):
        hio(y, op, support=np.ones((3, 3), dtype=bool))


def test_hio_reproducible(rng):
    op = make_fourier2d(5, 5, 2)
    y = np.abs(op.forward(rng.standard_normal(25)))
    np.testing.assert_array_equal(hio(y, op, iters=20, rng=3), hio(y, op, iters=20, rng=3))


def test_hio_noiseless_nonnegative_images():
    op = make_fourier2d(16, 16, 2)
    ok = 0
    for seed in range(100):
        r = np.random.default_rng(seed)
        x = r.uniform(size=256)
        y = np.abs(op.forward(x))
        xh = hio(y, op, iters=5000, rng=r, nonnegative=True)
        ok += np.linalg.norm(y - np.abs(op.forward(xh))) / np.linalg.norm(y) <= 0.05
    assert ok >= 70
