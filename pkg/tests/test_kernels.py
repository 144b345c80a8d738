import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import point_groups, random_groups, random_summary
from ocsmm.data import GaussianSummary, Group
from ocsmm.kernels import (BaseKernel, GroupKernelSpec, NumericalError, cross_gram, embedding_rbf,
                           emp_mean_inner, gaussian_analytic_inner, gram_matrix, median_heuristic,
                           psd_jitter, rbf_eval, rbf_gram, resolve_spec, spherical_normalize)
from ocsmm import kernels


def loop_mean_inner(A, B, sigma):
    # plain double loop, independent of the vectorized path
    total = 0.0
    for a in A:
        for b in B:
            total += math.exp(-sum((x - y) ** 2 for x, y in zip(a, b)) / (2 * sigma**2))
    return total / (len(A) * len(B))


def iso_1d_inner(m1, v1, m2, v2, sigma):
    s = sigma**2 + v1 + v2
    return math.sqrt(sigma**2 / s) * math.exp(-(m1 - m2) ** 2 / (2 * s))


def test_rbf_trivial():
    assert rbf_eval([0.0, 0.0], [0.0, 0.0], 1.0) == 1.0
    assert rbf_eval([0.0], [1.0], 1.0) == pytest.approx(math.exp(-0.5), rel=1e-15)
    assert BaseKernel(2.0)([0.0], [2.0]) == pytest.approx(math.exp(-0.5), rel=1e-15)


def test_rbf_rejects_bad_sigma():
    with pytest.raises(ValueError):
        BaseKernel(0.0)
    with pytest.raises(ValueError):
        rbf_eval([0.0], [1.0], -1.0)


def test_empirical_inner_matches_loop(rng):
    for _ in range(10):
        A = rng.standard_normal((rng.integers(1, 7), 3))
        B = rng.standard_normal((rng.integers(1, 7), 3))
        s = rng.uniform(0.3, 2.0)
        assert emp_mean_inner(A, B, s) == pytest.approx(loop_mean_inner(A, B, s), rel=1e-13)


def test_empirical_inner_derived_value():
    # {0}, {1, -1} in 1-d with sigma 1: mean of exp(-1/2) twice
    assert emp_mean_inner([[0.0]], [[1.0], [-1.0]], 1.0) == pytest.approx(math.exp(-0.5), rel=1e-15)


def test_analytic_matches_1d_closed_form(rng):
    for _ in range(10):
        m1, m2 = rng.standard_normal(2)
        v1, v2 = rng.uniform(0.01, 2.0, 2)
        s = rng.uniform(0.2, 2.0)
        got = gaussian_analytic_inner(GaussianSummary([m1], [[v1]]), GaussianSummary([m2], [[v2]]), s)
        assert got == pytest.approx(iso_1d_inner(m1, v1, m2, v2, s), rel=1e-12)


def test_analytic_accepts_tuples(rng):
    g = random_summary(rng, 2)
    assert gaussian_analytic_inner((g.mean, g.cov), g, 0.7) == gaussian_analytic_inner(g, g, 0.7)


def test_analytic_dirac_limit_equals_rbf(rng):
    tiny = 1e-12 * np.eye(2)
    for _ in range(5):
        x, y = rng.standard_normal((2, 2))
        got = gaussian_analytic_inner((x, tiny), (y, tiny), 0.8)
        assert got == pytest.approx(rbf_eval(x, y, 0.8), rel=1e-9)


def test_empirical_converges_to_analytic(rng):
    a, b = random_summary(rng, 2), random_summary(rng, 2)
    exact = gaussian_analytic_inner(a, b, 1.0)
    errs = []
    for n in (50, 800):
        A = rng.multivariate_normal(a.mean, a.cov, n)
        B = rng.multivariate_normal(b.mean, b.cov, n)
        errs.append(abs(emp_mean_inner(A, B, 1.0) - exact))
    assert errs[1] < 0.02
    assert errs[1] < errs[0] + 1e-3


def test_embedding_rbf_values():
    assert embedding_rbf(1.0, 1.0, 1.0, 0.5) == 1.0
    assert embedding_rbf(1.0, 1.0, 0.5, 1.0) == pytest.approx(math.exp(-0.5), rel=1e-15)


def test_spherical_normalize_example():
    K = np.array([[4.0, 2.0], [2.0, 1.0]])
    N = spherical_normalize(K)
    np.testing.assert_allclose(N, [[1.0, 1.0], [1.0, 1.0]], rtol=1e-15)


def test_spherical_normalize_rejects_zero_diagonal():
    with pytest.raises((ValueError, NumericalError)):
        spherical_normalize(np.array([[0.0, 0.0], [0.0, 1.0]]))


@given(point_groups(), st.sampled_from(["empirical", "analytic"]), st.sampled_from(["linear", "rbf"]),
       st.booleans())
def test_gram_symmetric_psd_bounded(groups, level1, level2, normalize):
    spec = resolve_spec(GroupKernelSpec(level1=level1, level2=level2, normalize=normalize), groups)
    G = gram_matrix(groups, spec)
    K = G.entries
    assert np.array_equal(K, K.T)
    assert np.linalg.eigvalsh(K).min() >= -1e-9
    assert np.all(K <= 1 + 1e-12)
    if normalize or level2 == "rbf":
        assert np.all(np.diag(K) == 1.0)


@given(point_groups())
def test_gram_permutation_equivariant(groups):
    spec = resolve_spec(GroupKernelSpec(), groups)
    perm = np.random.default_rng(len(groups)).permutation(len(groups))
    K = gram_matrix(groups, spec).entries
    Kp = gram_matrix([groups[i] for i in perm], spec).entries
    np.testing.assert_allclose(Kp, K[np.ix_(perm, perm)], rtol=1e-13, atol=1e-15)


@given(point_groups(min_groups=3))
def test_normalization_idempotent(groups):
    spec = resolve_spec(GroupKernelSpec(), groups)
    N = spherical_normalize(gram_matrix(groups, spec).entries)
    np.testing.assert_allclose(spherical_normalize(N), N, rtol=0, atol=1e-14)
    assert np.all(np.diag(N) == 1.0)


def test_cross_gram_matches_gram(rng):
    groups = random_groups(rng, 6)
    for spec in (GroupKernelSpec(sigma=0.9), GroupKernelSpec(sigma=0.9, level2="rbf", gamma=0.5),
                 GroupKernelSpec(sigma=0.9, normalize=True)):
        G = gram_matrix(groups, spec)
        C = cross_gram(groups, G.self_inner, groups, spec)
        np.testing.assert_allclose(C, G.entries, rtol=1e-12, atol=1e-14)


def test_distinct_embeddings_stay_distinct(rng):
    groups = [Group(f"s{i}", summary=random_summary(rng, 2)) for i in range(10)]
    spec = GroupKernelSpec(level1="analytic", sigma=1.0, normalize=True)
    K = gram_matrix(groups, spec).entries
    off = K[~np.eye(10, dtype=bool)]
    assert off.max() < 1 - 1e-12


def test_iso_omega_is_gaussian_component():
    # a point with variance w behaves like the summary N(x, w I)
    g = Group("a", [[0.3, -0.2]], omega=[0.4])
    s = Group("b", summary=GaussianSummary([0.3, -0.2], 0.4 * np.eye(2)))
    h = Group("c", [[1.0, 1.0]], omega=[0.1])
    spec = GroupKernelSpec(level1="analytic", sigma=0.7)
    Kg = gram_matrix([g, h], spec).entries
    Ks = gram_matrix([s, h], spec).entries
    np.testing.assert_allclose(Kg, Ks, rtol=1e-12)


def test_psd_jitter_ladder():
    assert psd_jitter(np.eye(3)) == 0.0
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NumericalError):
        psd_jitter(bad)


def test_rbf_gram_shape(rng):
    X, Y = rng.standard_normal((4, 2)), rng.standard_normal((3, 2))
    K = rbf_gram(X, Y, 1.0)
    assert K.shape == (4, 3)
    assert K[1, 2] == pytest.approx(rbf_eval(X[1], Y[2], 1.0), rel=1e-14)


def test_median_heuristic_small():
    # pairwise squared distances 1, 4, 1 -> median 1
    groups = [Group("a", [[0.0], [1.0]]), Group("b", [[2.0]])]
    assert median_heuristic(groups) == 1.0


def test_median_heuristic_selection_path_exact(rng, monkeypatch):
    X = rng.standard_normal((301, 3))
    exact = median_heuristic(X)
    monkeypatch.setattr(kernels, "_DIRECT_PAIRS", 10)
    assert median_heuristic(X) == exact
    X2 = rng.standard_normal((300, 2))
    monkeypatch.setattr(kernels, "_DIRECT_PAIRS", 10**9)
    even = median_heuristic(X2)
    monkeypatch.setattr(kernels, "_DIRECT_PAIRS", 10)
    assert median_heuristic(X2) == even


def test_resolve_spec_fills_bandwidths(rng):
    groups = random_groups(rng, 5)
    spec = resolve_spec(GroupKernelSpec(level2="rbf"), groups)
    assert spec.sigma > 0 and spec.gamma > 0
    tied = resolve_spec(GroupKernelSpec(level2="rbf", gamma_preset="sigma"), groups)
    assert tied.gamma == tied.sigma
    assert GroupKernelSpec.from_dict(spec.to_dict()) == spec


def test_spec_validation():
    with pytest.raises(ValueError):
        GroupKernelSpec(level1="bogus")
    with pytest.raises(ValueError):
        GroupKernelSpec(level2="poly")
