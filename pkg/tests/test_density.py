import numpy as np
import pytest
from scipy.stats import multivariate_normal

from ocsmm.data import GaussianSummary, Group
from ocsmm.density import (DensityModel, gaussian_mixture_density, kde_eval, ocsmm_density,
                           vkde_balloon, vkde_sample_smoothing)
from ocsmm.evaluation import GridSpec
from ocsmm.kernels import GroupKernelSpec
from ocsmm.model import fit

SIGMA = 0.4


def grid_points(X, n=10):
    lo, hi = X.min(0) - 1, X.max(0) + 1
    return GridSpec(tuple(lo), tuple(hi), n).points()


def fit_uniform(groups, sigma=SIGMA):
    return fit(groups, GroupKernelSpec(level1="analytic", sigma=sigma), nu=1.0)


def rel_close(a, b, tol=1e-8):
    np.testing.assert_allclose(a, b, rtol=tol, atol=0)


def test_mixture_matches_scipy(rng):
    X = rng.standard_normal((5, 2))
    v = rng.uniform(0.1, 1.0, 5)
    y = rng.standard_normal((7, 2))
    ref = np.mean([multivariate_normal(x, vi * np.eye(2)).pdf(y) for x, vi in zip(X, v)], axis=0)
    rel_close(gaussian_mixture_density(X, v, y), ref, 1e-12)


def test_kde_correspondence(rng):
    X = rng.standard_normal((30, 2))
    m = fit_uniform([Group(f"p{i}", x) for i, x in enumerate(X)])
    Y = grid_points(X)
    assert Y.shape[0] == 100
    rel_close(ocsmm_density(m, 0.0, Y), kde_eval(X, SIGMA, Y))


def test_sample_smoothing_correspondence(rng):
    X = rng.standard_normal((30, 2))
    w = rng.uniform(0.05, 0.3, 30)
    m = fit_uniform([Group(f"p{i}", x, omega=[wi]) for i, (x, wi) in enumerate(zip(X, w))])
    Y = grid_points(X)
    rel_close(ocsmm_density(m, 0.0, Y), vkde_sample_smoothing(X, np.sqrt(SIGMA**2 + w), Y))


def test_balloon_correspondence(rng):
    X = rng.standard_normal((30, 2))
    m = fit_uniform([Group(f"p{i}", x) for i, x in enumerate(X)])
    Y = grid_points(X)
    rel_close(ocsmm_density(m, 0.3, Y), vkde_balloon(X, SIGMA, 0.3, Y))


def test_combined_correspondence(rng):
    X = rng.standard_normal((30, 2))
    w = rng.uniform(0.05, 0.3, 30)
    m = fit_uniform([Group(f"p{i}", x, omega=[wi]) for i, (x, wi) in enumerate(zip(X, w))])
    Y = grid_points(X)
    ref = gaussian_mixture_density(X, SIGMA**2 + w + 0.3**2, Y)
    rel_close(ocsmm_density(m, 0.3, Y), ref)


def test_full_cov_summaries_are_gaussians(rng):
    covs = [np.array([[0.3, 0.1], [0.1, 0.2]]), np.array([[0.1, 0.0], [0.0, 0.4]])]
    means = rng.standard_normal((2, 2))
    m = fit_uniform([Group(f"s{i}", summary=GaussianSummary(mu, S)) for i, (mu, S) in enumerate(zip(means, covs))])
    Y = rng.standard_normal((20, 2))
    ref = np.mean([multivariate_normal(mu, S + SIGMA**2 * np.eye(2)).pdf(Y) for mu, S in zip(means, covs)], axis=0)
    rel_close(ocsmm_density(m, 0.0, Y), ref, 1e-10)


@pytest.mark.parametrize("kind", ["kde", "balloon", "sample_smoothing", "ocsmm"])
def test_integrates_to_one(kind, rng):
    X = rng.standard_normal((8, 2)) * 0.3
    s = SIGMA
    if kind == "ocsmm":
        est = DensityModel("ocsmm", model=fit_uniform([Group(f"p{i}", x) for i, x in enumerate(X)]), test_sigma=0.1)
    else:
        est = DensityModel(kind, centers=X, h=s, sigmas=np.full(8, s), test_sigma=0.1)
    grid = GridSpec((X[:, 0].min() - 8 * s, X[:, 1].min() - 8 * s), (X[:, 0].max() + 8 * s, X[:, 1].max() + 8 * s), 401)
    assert grid.integrate(est(grid.points())) == pytest.approx(1.0, abs=1e-6)


def test_unnormalized_scale(rng):
    X = rng.standard_normal((5, 2))
    m = fit_uniform([Group(f"p{i}", x) for i, x in enumerate(X)])
    y = rng.standard_normal((3, 2))
    rel_close(ocsmm_density(m, 0.0, y, normalized=False),
              ocsmm_density(m, 0.0, y) * 2 * np.pi * SIGMA**2, 1e-13)


def test_density_model_validation(rng):
    with pytest.raises(ValueError):
        DensityModel("mystery", centers=np.zeros((1, 2)), h=1.0)
    with pytest.raises(ValueError):
        DensityModel("kde", centers=np.zeros((1, 2)))
    m = fit([Group("a", [[0.0, 0.0]]), Group("b", [[1.0, 0.0]])], GroupKernelSpec(sigma=1.0), nu=1.0)
    with pytest.raises(ValueError):
        ocsmm_density(m, 0.0, [0.0, 0.0])
    with pytest.raises(ValueError):
        kde_eval(np.zeros((2, 2)), 0.0, [0.0, 0.0])
