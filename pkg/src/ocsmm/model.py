"""One-class support measure machine: fit on groups, score groups."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .data import Group, GroupDataset, as_groups, group_from_record, group_to_record
from .kernels import GroupKernelSpec, cross_gram, gram_matrix, resolve_spec
from .solver import ALPHA_ZERO_TOL, DualProblem, DualSolution, solve_dual

MODEL_FORMAT = "ocsmm-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-6
    max_iter: int = 10_000_000


@dataclass(frozen=True, eq=False)
class OcsmmModel:
    """Fitted detector. ``decision(P) = sum_i alpha_i K(P_i, P) - rho``."""

    spec: GroupKernelSpec
    support_groups: tuple[Group, ...]
    alpha: np.ndarray
    rho: float
    support_self: np.ndarray  # level-1 self inner products of the support groups
    fit_report: dict[str, Any] = field(default_factory=dict)
    # full dual solution; only available on freshly fitted models
    solution: DualSolution | None = field(default=None, repr=False)

    @property
    def nu(self) -> float:
        return self.fit_report["nu"]

    @property
    def dim(self) -> int:
        return self.support_groups[0].dim

    def decision_function(self, groups: Sequence[Group] | GroupDataset) -> np.ndarray:
        groups = as_groups(groups)
        if not groups:
            raise ValueError("no groups to score")
        for g in groups:
            if g.dim != self.dim:
                raise ValueError(f"group {g.id!r} has dimension {g.dim}, model expects {self.dim}")
        K = cross_gram(self.support_groups, self.support_self, groups, self.spec)
        return self.alpha @ K - self.rho

    def decision(self, group: Group) -> float:
        return float(self.decision_function([group])[0])

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "spec": self.spec.to_dict(),
            "rho": self.rho,
            "alpha": self.alpha.tolist(),
            "support_self": self.support_self.tolist(),
            "support_groups": [group_to_record(g.without_label()) for g in self.support_groups],
            "fit_report": self.fit_report,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "OcsmmModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError("not an OCSMM model document")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        groups = tuple(group_from_record(r) for r in d["support_groups"])
        return cls(
            spec=GroupKernelSpec.from_dict(d["spec"]),
            support_groups=groups,
            alpha=np.array(d["alpha"], dtype=np.float64),
            rho=float(d["rho"]),
            support_self=np.array(d["support_self"], dtype=np.float64),
            fit_report=dict(d["fit_report"]),
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, allow_nan=False)

    @classmethod
    def load(cls, path: str | Path) -> "OcsmmModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def fit(dataset: Sequence[Group] | GroupDataset, spec: GroupKernelSpec | None = None,
        nu: float = 0.1, solver: SolverConfig | None = None) -> OcsmmModel:
    groups = as_groups(dataset)
    if not groups:
        raise ValueError("cannot fit on an empty dataset")
    solver = solver or SolverConfig()
    spec = resolve_spec(spec or GroupKernelSpec(), groups)
    gram = gram_matrix(groups, spec)
    sol = solve_dual(DualProblem(gram.entries, nu, solver.tol, solver.max_iter))
    keep = sol.alpha > ALPHA_ZERO_TOL
    report = {
        "nu": nu,
        "n_groups": len(groups),
        "objective": sol.objective,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "max_violation": sol.max_violation,
        "alpha_sum": float(sol.alpha.sum()),
        "n_support": int(keep.sum()),
        "n_bounded": int(sol.bounded_sv_index.size),
        "jitter": gram.jitter,
        "tol": solver.tol,
        "support_index": np.flatnonzero(keep).tolist(),
    }
    return OcsmmModel(
        spec=spec,
        support_groups=tuple(g for g, k in zip(groups, keep) if k),
        alpha=sol.alpha[keep].copy(),
        rho=sol.rho,
        support_self=gram.self_inner[keep].copy(),
        fit_report=report,
        solution=sol,
    )


def decision(model: OcsmmModel, group: Group) -> float:
    return model.decision(group)


@dataclass(frozen=True, eq=False)
class ScoredDataset:
    group_ids: tuple[str, ...]
    decision: np.ndarray
    labels: np.ndarray | None = None

    @property
    def is_anomaly(self) -> np.ndarray:
        return self.decision < 0

    @property
    def order(self) -> np.ndarray:
        """Group indices from most to least anomalous (ties by index)."""
        return np.argsort(self.decision, kind="stable")

    @property
    def rank(self) -> np.ndarray:
        """1-based position of each group in :attr:`order`."""
        r = np.empty(len(self.decision), dtype=np.int64)
        r[self.order] = np.arange(1, len(self.decision) + 1)
        return r

    @property
    def anomaly_score(self) -> np.ndarray:
        return -self.decision


def score_dataset(model: OcsmmModel, dataset: Sequence[Group] | GroupDataset) -> ScoredDataset:
    groups = as_groups(dataset)
    if not groups:
        raise ValueError("no groups to score")
    values = model.decision_function(groups)
    labels = None
    if all(g.label is not None for g in groups):
        labels = np.array([g.label for g in groups], dtype=bool)
    return ScoredDataset(tuple(g.id for g in groups), values, labels)


def nu_property_check(model: OcsmmModel, training: Sequence[Group] | GroupDataset) -> dict[str, Any]:
    """Outlier fraction <= nu + 1/l and support fraction >= nu - 1/l."""
    groups = as_groups(training)
    n = len(groups)
    tol = model.fit_report.get("tol", 1e-6)
    values = model.decision_function(groups)
    outlier_fraction = float(np.mean(values < -tol))
    sv_fraction = model.fit_report["n_support"] / n
    nu = model.nu
    return {
        "outlier_fraction": outlier_fraction,
        "sv_fraction": sv_fraction,
        "holds": outlier_fraction <= nu + 1.0 / n and sv_fraction >= nu - 1.0 / n,
    }
