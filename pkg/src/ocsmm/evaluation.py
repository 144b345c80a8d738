"""Detection metrics, nu sweeps and integrated squared error."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import rankdata

from .data import Group, GroupDataset, as_groups
from .kernels import GroupKernelSpec, NumericalError
from .model import SolverConfig, fit, nu_property_check

DEFAULT_NUS = tuple(round(0.1 * k, 1) for k in range(1, 10))


@dataclass(frozen=True, eq=False)
class RocResult:
    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    auc: float
    ap: float


def _check_binary(labels) -> np.ndarray:
    labels = np.asarray(labels).astype(bool)
    if labels.all() or not labels.any():
        raise ValueError("ROC needs at least one positive and one negative label")
    return labels


def auc_score(scores, labels) -> float:
    """Mann-Whitney AUC; tied positive/negative pairs count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    ranks = rankdata(scores)  # average ranks on ties
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def average_precision(scores, labels) -> float:
    """Mean precision at each positive, scanning scores high to low.

    Tied scores keep their input order.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    precision = np.cumsum(hits) / np.arange(1, hits.size + 1)
    return float(precision[hits].mean())


def roc_auc(scores, labels) -> RocResult:
    """ROC curve, AUC and AP for anomaly scores (higher = more anomalous)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_binary(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    thresholds = np.unique(scores)[::-1]
    pos = labels.sum()
    neg = labels.size - pos
    # flag everything with score >= threshold; one curve point per distinct score
    tp = np.array([np.sum(labels & (scores >= t)) for t in thresholds])
    fp = np.array([np.sum(~labels & (scores >= t)) for t in thresholds])
    tpr = np.concatenate([[0.0], tp / pos])
    fpr = np.concatenate([[0.0], fp / neg])
    thresholds = np.concatenate([[np.inf], thresholds])
    return RocResult(thresholds, tpr, fpr, auc_score(scores, labels), average_precision(scores, labels))


def curve_area(result: RocResult) -> float:
    return float(trapezoid(result.tpr, result.fpr))


def nu_sweep(dataset: GroupDataset | Sequence[Group], spec: GroupKernelSpec | None = None,
             nus: Sequence[float] = DEFAULT_NUS, solver: SolverConfig | None = None) -> list[dict]:
    """Fit and score the full (unlabeled) dataset once per nu, then evaluate with the labels."""
    groups = as_groups(dataset)
    labels = np.array([bool(g.label) for g in groups])
    if any(g.label is None for g in groups):
        raise ValueError("nu_sweep needs a fully labeled dataset")
    unlabeled = [g.without_label() for g in groups]
    rows = []
    for nu in nus:
        row = {"nu": nu}
        try:
            model = fit(unlabeled, spec, nu, solver)
            scores = -model.decision_function(unlabeled)
            res = roc_auc(scores, labels)
            check = nu_property_check(model, unlabeled)
            row.update(auc=res.auc, ap=res.ap, outlier_fraction=check["outlier_fraction"],
                       sv_fraction=check["sv_fraction"], converged=model.fit_report["converged"])
        except (ValueError, NumericalError) as exc:
            warnings.warn(f"nu={nu}: fit failed ({exc})", stacklevel=2)
            row.update(auc=float("nan"), ap=float("nan"), outlier_fraction=float("nan"),
                       sv_fraction=float("nan"), converged=False)
        rows.append(row)
    return rows


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid on a box; ``lower``/``upper`` per axis, ``nodes`` per axis."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    nodes: int = 401

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or not 1 <= len(self.lower) <= 2:
            raise ValueError("grid must be 1- or 2-dimensional")
        if any(u <= lo for lo, u in zip(self.lower, self.upper)):
            raise ValueError("grid upper bounds must exceed lower bounds")
        if self.nodes < 2:
            raise ValueError("grid needs at least 2 nodes per axis")

    @property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, u, self.nodes) for lo, u in zip(self.lower, self.upper)]

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def integrate(self, values: np.ndarray) -> float:
        """Trapezoid rule over grid values ordered like :meth:`points`."""
        v = np.asarray(values, dtype=np.float64).reshape([self.nodes] * len(self.lower))
        for ax in reversed(self.axes):
            v = trapezoid(v, ax, axis=-1)
        return float(v)


def density_ise(estimate: Callable[[np.ndarray], np.ndarray], truth: Callable[[np.ndarray], np.ndarray],
                grid: GridSpec) -> float:
    """Integrated squared error of ``estimate`` against ``truth`` on ``grid``."""
    Y = grid.points()
    diff = np.asarray(estimate(Y), dtype=np.float64) - np.asarray(truth(Y), dtype=np.float64)
    return max(grid.integrate(diff**2), 0.0)


def write_table(rows: Sequence[dict], path: str | Path) -> None:
    if not rows:
        raise ValueError("empty table")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        cols = list(rows[0])
        writer.writerow(cols)
        for row in rows:
            writer.writerow([fmt(row[c]) for c in cols])


def fmt(v) -> str:
    """Shortest round-trip text for floats, plain text otherwise."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)
