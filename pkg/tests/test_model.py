import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import point_groups, random_groups
from ocsmm.data import Group
from ocsmm.kernels import GroupKernelSpec, rbf_gram
from ocsmm.model import OcsmmModel, SolverConfig, fit, nu_property_check, score_dataset
from ocsmm.solver import DualProblem, solve_dual

pytestmark = pytest.mark.filterwarnings("ignore:nu \\* l")


def test_single_group_fit():
    g = Group("only", [[0.0, 0.0], [1.0, 0.0]])
    m = fit([g], GroupKernelSpec(sigma=1.0), nu=0.5)
    assert m.alpha.tolist() == [1.0]
    assert m.decision(g) == pytest.approx(0.0, abs=1e-15)


def test_ocsvm_reduction(rng):
    X = rng.standard_normal((25, 2))
    groups = [Group(f"p{i}", x) for i, x in enumerate(X)]
    m = fit(groups, GroupKernelSpec(sigma=0.8), nu=0.3, solver=SolverConfig(tol=1e-10))
    ref = solve_dual(DualProblem(rbf_gram(X, X, 0.8), 0.3, tol=1e-10))
    full = np.zeros(25)
    full[m.fit_report["support_index"]] = m.alpha
    np.testing.assert_allclose(full, np.where(ref.alpha > 1e-9, ref.alpha, 0), atol=1e-10)
    assert m.rho == pytest.approx(ref.rho, abs=1e-10)


def test_far_group_is_anomalous(rng):
    groups = random_groups(rng, 12)
    m = fit(groups, GroupKernelSpec(sigma=1.0), nu=0.2)
    far = Group("far", rng.standard_normal((5, 2)) + 50.0)
    # embedding of a distant group is orthogonal: decision tends to -rho
    assert m.decision(far) == pytest.approx(-m.rho, abs=1e-12)
    assert m.decision(far) < 0


def test_decision_continuity(rng):
    groups = random_groups(rng, 8)
    m = fit(groups, GroupKernelSpec(sigma=1.0), nu=0.3)
    base = rng.standard_normal((4, 2))
    d0 = m.decision(Group("t", base))
    d1 = m.decision(Group("t", base + 1e-7))
    assert abs(d1 - d0) < 1e-5


def test_dimension_mismatch(rng):
    m = fit(random_groups(rng, 4), GroupKernelSpec(sigma=1.0), nu=0.5)
    with pytest.raises(ValueError):
        m.decision(Group("x", np.zeros((2, 3))))


def test_persistence_round_trip(tmp_path, rng):
    groups = random_groups(rng, 9)
    for spec in (GroupKernelSpec(), GroupKernelSpec(level2="rbf", normalize=True),
                 GroupKernelSpec(level1="analytic")):
        m = fit(groups, spec, nu=0.3)
        m.save(tmp_path / "m.json")
        back = OcsmmModel.load(tmp_path / "m.json")
        assert np.array_equal(back.decision_function(groups), m.decision_function(groups))
        assert back.spec == m.spec and back.rho == m.rho


def test_load_rejects_foreign(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        OcsmmModel.load(p)


def test_score_dataset_ranks(rng):
    groups = random_groups(rng, 10)
    m = fit(groups, GroupKernelSpec(sigma=1.0), nu=0.3)
    s = score_dataset(m, groups)
    assert sorted(s.rank.tolist()) == list(range(1, 11))
    assert s.rank[np.argmin(s.decision)] == 1
    assert np.array_equal(s.is_anomaly, s.decision < 0)


@given(point_groups(min_groups=5, max_groups=12), st.sampled_from([0.1, 0.3, 0.5, 0.9]))
def test_nu_property(groups, nu):
    m = fit(groups, GroupKernelSpec(sigma=1.0), nu=nu)
    assert nu_property_check(m, groups)["holds"]


def test_fit_report_fields(rng):
    m = fit(random_groups(rng, 6), nu=0.5)
    r = m.fit_report
    assert r["alpha_sum"] == pytest.approx(1.0, abs=1e-12)
    assert r["n_support"] == len(m.support_groups)
    assert r["converged"]
