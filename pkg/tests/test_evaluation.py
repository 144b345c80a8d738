import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ocsmm.data import Group
from ocsmm.evaluation import (GridSpec, auc_score, average_precision, curve_area, density_ise, nu_sweep,
                              roc_auc, write_table)
from ocsmm.kernels import GroupKernelSpec

SCORES = [0.9, 0.8, 0.7, 0.6]
LABELS = [1, 0, 1, 0]


def test_example_values():
    assert auc_score(SCORES, LABELS) == 0.75
    assert average_precision(SCORES, LABELS) == pytest.approx(5 / 6, rel=1e-15)


def test_ties_count_half():
    assert auc_score([1.0, 1.0], [1, 0]) == 0.5


def test_single_class_rejected():
    with pytest.raises(ValueError):
        auc_score([1.0, 2.0], [1, 1])


def test_roc_curve_shape():
    r = roc_auc(SCORES, LABELS)
    assert r.fpr[0] == 0 and r.tpr[0] == 0 and r.fpr[-1] == 1 and r.tpr[-1] == 1
    assert np.all(np.diff(r.fpr) >= 0) and np.all(np.diff(r.tpr) >= 0)
    assert curve_area(r) == pytest.approx(r.auc, abs=1e-15)


labelled = st.lists(st.tuples(st.integers(-100, 100).map(float), st.booleans()), min_size=2, max_size=30).filter(
    lambda xs: 0 < sum(b for _, b in xs) < len(xs))


@given(labelled, st.floats(0.1, 10), st.floats(-5, 5))
def test_auc_invariances(xs, a, b):
    s = np.array([x for x, _ in xs])
    y = np.array([l for _, l in xs])
    base = auc_score(s, y)
    assert auc_score(a * s + b, y) == pytest.approx(base, abs=1e-12)
    assert auc_score(-s, y) == pytest.approx(1 - base, abs=1e-12)
    assert auc_score(np.exp(s / 50), y) == pytest.approx(base, abs=1e-12)
    assert curve_area(roc_auc(s, y)) == pytest.approx(base, abs=1e-12)


def test_ise_scaling_identity():
    grid = GridSpec((-6.0, -6.0), (6.0, 6.0), 201)
    f = lambda Y: np.exp(-0.5 * np.sum(Y**2, axis=1)) / (2 * np.pi)
    zero = lambda Y: np.zeros(Y.shape[0])
    # ISE(c f, f) = (c - 1)^2 * int f^2, int f^2 = 1/(4 pi) for the standard normal
    assert density_ise(lambda Y: 2 * f(Y), f, grid) == pytest.approx(1 / (4 * np.pi), rel=1e-6)
    assert density_ise(f, zero, grid) == pytest.approx(1 / (4 * np.pi), rel=1e-6)
    assert density_ise(f, f, grid) == 0.0


def test_grid_integration_1d():
    g = GridSpec((0.0,), (1.0,), 11)
    assert g.integrate(g.points()[:, 0]) == pytest.approx(0.5, abs=1e-15)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec((0.0,), (0.0,), 10)
    with pytest.raises(ValueError):
        GridSpec((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))


def test_nu_sweep_rows(rng):
    groups = [Group(f"n{i}", rng.standard_normal((5, 2)), label=False) for i in range(12)]
    groups.append(Group("a", rng.standard_normal((5, 2)) + 6, label=True))
    rows = nu_sweep(groups, GroupKernelSpec(sigma=1.0), nus=[0.1, 0.3, 0.5, 0.9])
    assert [r["nu"] for r in rows] == [0.1, 0.3, 0.5, 0.9]
    assert all(r["converged"] for r in rows)
    # with nu * l ~ 1 the box bound is loose and the isolated group can be absorbed
    assert [r["auc"] for r in rows[1:]] == [1.0, 1.0, 1.0]
    assert all(r["outlier_fraction"] <= r["nu"] + 1 / 13 for r in rows)


def test_write_table_shortest_floats(tmp_path):
    write_table([{"a": 0.1, "b": True, "c": 3}], tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == "a,b,c\n0.1,1,3\n"
