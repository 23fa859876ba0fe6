import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from robustpr.noise import (
    AlphaStable,
    GaussianMixture,
    Laplacian,
    chambers_mallows_stuck,
    outlier_count,
    sample,
    scale_to_snr,
    sparse_outliers,
)
from robustpr.metrics import realized_snr_db

N_MOMENT = 100_000


def test_laplacian_moments():
    n = sample(Laplacian(1.0), N_MOMENT, 0)
    assert abs(np.var(n) - 1.0) < 0.05
    assert abs(np.mean(n)) < 0.02


def test_laplacian_ks_against_closed_form_cdf():
    model = Laplacian(1.7)
    n = sample(model, 10_000, 1)
    assert stats.kstest(n, model.cdf).pvalue > 0.01


def test_laplacian_cdf_matches_scipy():
    t = np.linspace(-5, 5, 41)
    model = Laplacian(2.0)
    np.testing.assert_allclose(model.cdf(t), stats.laplace(scale=2.0 / np.sqrt(2)).cdf(t), atol=1e-14)


def test_alpha_two_is_gaussian_with_variance_two_gamma_sq():
    gamma = 1.5
    n = sample(AlphaStable(alpha=2.0, beta=0.0, gamma=gamma), N_MOMENT, 2)
    assert abs(np.var(n) / (2 * gamma**2) - 1) < 0.05


def test_alpha_one_is_cauchy():
    gamma = 2.0
    n = sample(AlphaStable(alpha=1.0, beta=0.0, gamma=gamma), N_MOMENT, 3)
    q1, med, q3 = np.quantile(n, [0.25, 0.5, 0.75])
    assert abs(med) < 0.02 * gamma
    assert abs(q3 / gamma - 1) < 0.02 and abs(-q1 / gamma - 1) < 0.02


@pytest.mark.parametrize("alpha,beta", [(0.8, 0.0), (1.5, 0.0), (1.2, 0.5), (0.6, -0.7)])
def test_stable_quantiles_match_scipy(alpha, beta):
    # scipy's S1 parameterization has the same characteristic function
    n = chambers_mallows_stuck(alpha, beta, 2.0, 0.0, 20_000, np.random.default_rng(4))
    ref = stats.levy_stable(alpha, beta, loc=0.0, scale=2.0)
    qs = np.array([0.1, 0.25, 0.5, 0.75, 0.9])
    np.testing.assert_allclose(np.quantile(n, qs), ref.ppf(qs), rtol=0.06, atol=0.06)


def test_default_stable_is_symmetric():
    model = AlphaStable()
    assert (model.alpha, model.beta, model.gamma, model.mu) == (0.8, 0.0, 2.0, 0.0)
    n = sample(model, N_MOMENT, 5)
    assert abs(np.median(n)) < 0.05


def test_degenerate_mixture_is_gaussian():
    n = sample(GaussianMixture((1.0, 0.0), (2.5, 100.0)), N_MOMENT, 6)
    assert abs(np.var(n) / 2.5 - 1) < 0.05


def test_mixture_variance():
    model = GaussianMixture((0.9, 0.1), (0.1, 100.0))
    n = sample(model, N_MOMENT, 7)
    assert model.variance == pytest.approx(10.09)
    assert abs(np.var(n) / model.variance - 1) < 0.05


@pytest.mark.parametrize("bad", [
    lambda: Laplacian(0.0),
    lambda: AlphaStable(alpha=2.5),
    lambda: AlphaStable(beta=1.5),
    lambda: AlphaStable(gamma=-1),
    lambda: GaussianMixture((0.5, 0.6), (1, 2)),
    lambda: GaussianMixture((0.5, 0.5), (-1, 2)),
])
def test_invalid_parameters(bad):
    with pytest.raises(ValueError):
        bad()


def test_sample_rejects_bad_count():
    with pytest.raises(ValueError):
        sample(Laplacian(), -1, 0)
    with pytest.raises(TypeError):
        sample("laplace", 3, 0)


def test_scale_to_snr_definition(rng):
    clean = rng.standard_normal(50)
    n = rng.standard_normal(50)
    s0 = scale_to_snr(n, clean, 0.0)
    assert np.linalg.norm(s0) == pytest.approx(np.linalg.norm(clean), rel=1e-12)
    s20 = scale_to_snr(n, clean, 20.0)
    assert np.sum(clean**2) / np.sum(s20**2) == pytest.approx(100.0, rel=1e-12)
    # direction preserved
    assert abs(np.dot(s20, n) / (np.linalg.norm(s20) * np.linalg.norm(n)) - 1) < 1e-12


@settings(max_examples=50, deadline=None)
@given(snr=st.floats(-30, 60), seed=st.integers(0, 2**31))
def test_scale_to_snr_is_exact(snr, seed):
    r = np.random.default_rng(seed)
    clean, n = r.standard_normal(32), r.standard_normal(32)
    assert realized_snr_db(clean, scale_to_snr(n, clean, snr)) == pytest.approx(snr, abs=1e-9)


def test_scale_to_snr_edge_cases():
    np.testing.assert_array_equal(scale_to_snr(np.zeros(4), np.ones(4), 10.0), np.zeros(4))
    with pytest.raises(ValueError):
        scale_to_snr(np.ones(4), np.zeros(4), 10.0)


def test_sparse_outliers_counts():
    assert outlier_count(0.1, 128) == 13
    assert outlier_count(0.25, 2) == 1
    np.testing.assert_array_equal(sparse_outliers(0.0, 100.0, 20, 0), np.zeros(20))
    assert np.count_nonzero(sparse_outliers(0.1, 100.0, 128, 0)) == 13
    full = sparse_outliers(1.0, 100.0, N_MOMENT, 1)
    assert np.count_nonzero(full) == N_MOMENT
    assert abs(np.var(full) / 100 - 1) < 0.05
    with pytest.raises(ValueError):
        sparse_outliers(1.5, 1.0, 10, 0)


def test_sampling_is_reproducible():
    for model in (Laplacian(), AlphaStable(), GaussianMixture()):
        np.testing.assert_array_equal(sample(model, 10, 99), sample(model, 10, 99))
