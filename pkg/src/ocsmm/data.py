"""Group containers and on-disk formats.

A dataset is a list of groups. Each group is a point cloud (optionally with a
per-point measurement variance ``omega``) or an explicit Gaussian summary
(``mean``/``cov``). Groups are stored one per line in JSONL::

    {"id": "g000", "points": [[0.1, 0.2], ...], "omega": [0.25, ...],
     "mean": [...], "cov": [[...], ...], "label": 0}

``omega`` may also hold one full ``d x d`` covariance per point.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


class DatasetFormatError(ValueError):
    """Raised for malformed dataset files; carries the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class GaussianSummary:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise ValueError(f"covariance shape {cov.shape} does not match mean of length {d}")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise ValueError("covariance is not symmetric")
        evals, evecs = np.linalg.eigh(cov)
        if evals.min() < -1e-10:
            raise ValueError(f"covariance is not PSD (min eigenvalue {evals.min():.3g})")
        if evals.min() < 0:
            cov = (evecs * np.clip(evals, 0.0, None)) @ evecs.T
            cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class Group:
    """One observed group: a sample set and/or a Gaussian summary.

    ``omega`` holds per-point measurement uncertainty, either isotropic
    variances (shape ``(n,)``) or full covariances (shape ``(n, d, d)``).
    ``label`` is evaluation-only (True = anomalous).
    """

    id: str
    points: np.ndarray | None = None
    omega: np.ndarray | None = None
    summary: GaussianSummary | None = None
    label: bool | None = None

    def __post_init__(self):
        pts = self.points
        if pts is not None:
            pts = np.asarray(pts, dtype=np.float64)
            if pts.ndim == 1:
                pts = pts[None, :]
            if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
                raise ValueError(f"group {self.id!r}: points must be a non-empty (n, d) array")
            if not np.all(np.isfinite(pts)):
                raise ValueError(f"group {self.id!r}: non-finite point coordinates")
            pts.setflags(write=False)
            object.__setattr__(self, "points", pts)
        if pts is None and self.summary is None:
            raise ValueError(f"group {self.id!r}: needs points or a Gaussian summary")
        if pts is not None and self.summary is not None and self.summary.dim != pts.shape[1]:
            raise ValueError(f"group {self.id!r}: summary dimension differs from points")
        if self.omega is not None:
            if pts is None:
                raise ValueError(f"group {self.id!r}: omega given without points")
            om = np.asarray(self.omega, dtype=np.float64)
            n, d = pts.shape
            if om.shape not in ((n,), (n, d, d)):
                raise ValueError(f"group {self.id!r}: omega shape {om.shape} does not match {n} points")
            if not np.all(np.isfinite(om)):
                raise ValueError(f"group {self.id!r}: non-finite omega")
            if om.ndim == 1 and np.any(om < 0):
                raise ValueError(f"group {self.id!r}: negative omega")
            om.setflags(write=False)
            object.__setattr__(self, "omega", om)
        if self.label is not None:
            object.__setattr__(self, "label", bool(self.label))

    @property
    def dim(self) -> int:
        return self.points.shape[1] if self.points is not None else self.summary.dim

    @property
    def size(self) -> int:
        return self.points.shape[0] if self.points is not None else 1

    def without_label(self) -> "Group":
        return Group(self.id, self.points, self.omega, self.summary, None)


@dataclass(frozen=True)
class GroupDataset:
    groups: tuple[Group, ...]
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        groups = tuple(self.groups)
        if not groups:
            raise ValueError("no groups")
        dims = {g.dim for g in groups}
        if len(dims) != 1:
            raise ValueError(f"inconsistent dimensions across groups: {sorted(dims)}")
        ids = [g.id for g in groups]
        if len(set(ids)) != len(ids):
            raise ValueError("group ids are not unique")
        object.__setattr__(self, "groups", groups)

    @property
    def dim(self) -> int:
        return self.groups[0].dim

    @property
    def labels(self) -> np.ndarray | None:
        if any(g.label is None for g in self.groups):
            return None
        return np.array([g.label for g in self.groups], dtype=bool)

    def __len__(self) -> int:
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)

    def __getitem__(self, i):
        return self.groups[i]


def as_groups(data: GroupDataset | Sequence[Group]) -> list[Group]:
    if isinstance(data, GroupDataset):
        return list(data.groups)
    return list(data)


def _tolist(a: np.ndarray) -> list:
    # float() round-trips exactly through json's repr-based float printing
    return np.asarray(a, dtype=np.float64).tolist()


def group_to_record(g: Group) -> dict[str, Any]:
    rec: dict[str, Any] = {"id": g.id}
    if g.points is not None:
        rec["points"] = _tolist(g.points)
    if g.omega is not None:
        rec["omega"] = _tolist(g.omega)
    if g.summary is not None:
        rec["mean"] = _tolist(g.summary.mean)
        rec["cov"] = _tolist(g.summary.cov)
    if g.label is not None:
        rec["label"] = int(g.label)
    return rec


def _reject_constant(token: str):
    raise ValueError(f"non-finite number {token}")


def group_from_record(rec: Any, line: int | None = None) -> Group:
    if not isinstance(rec, dict):
        raise DatasetFormatError("record must be a JSON object", line)
    unknown = set(rec) - {"id", "points", "omega", "mean", "cov", "label"}
    if unknown:
        raise DatasetFormatError(f"unknown fields {sorted(unknown)}", line)
    if not isinstance(rec.get("id"), str):
        raise DatasetFormatError("missing or non-string 'id'", line)
    if ("mean" in rec) != ("cov" in rec):
        raise DatasetFormatError("'mean' and 'cov' must appear together", line)
    label = rec.get("label")
    if label not in (None, 0, 1, True, False):
        raise DatasetFormatError(f"label must be 0 or 1, got {label!r}", line)
    try:
        summary = None
        if "mean" in rec:
            summary = GaussianSummary(np.array(rec["mean"], dtype=np.float64),
                                      np.array(rec["cov"], dtype=np.float64))
        points = np.array(rec["points"], dtype=np.float64) if "points" in rec else None
        if points is not None and points.ndim != 2:
            raise ValueError("'points' must be a list of coordinate lists")
        omega = np.array(rec["omega"], dtype=np.float64) if "omega" in rec else None
        return Group(rec["id"], points, omega, summary, None if label is None else bool(label))
    except (ValueError, TypeError) as exc:
        raise DatasetFormatError(str(exc), line) from exc


def save_jsonl(dataset: GroupDataset | Sequence[Group], path: str | Path) -> None:
    groups = as_groups(dataset)
    with open(path, "w", encoding="utf-8") as fh:
        for g in groups:
            fh.write(json.dumps(group_to_record(g), allow_nan=False, separators=(",", ":")))
            fh.write("\n")


def load_jsonl(path: str | Path, provenance: dict | None = None) -> GroupDataset:
    groups = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw, parse_constant=_reject_constant)
            except ValueError as exc:
                raise DatasetFormatError(f"invalid JSON ({exc})", lineno) from exc
            groups.append(group_from_record(rec, lineno))
    if not groups:
        raise DatasetFormatError("no groups")
    try:
        return GroupDataset(tuple(groups), dict(provenance or {"source": str(path)}))
    except ValueError as exc:
        raise DatasetFormatError(str(exc)) from exc


def load_csv(path: str | Path) -> GroupDataset:
    """Flat importer: columns ``group_id, x1..xd[, omega][, label]``.

    Rows sharing a ``group_id`` form one group, in order of first appearance.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        if "group_id" not in cols:
            raise DatasetFormatError("missing 'group_id' column", 1)
        xcols = sorted((c for c in cols if c.startswith("x") and c[1:].isdigit()),
                       key=lambda c: int(c[1:]))
        if not xcols:
            raise DatasetFormatError("no coordinate columns x1..xd", 1)
        has_omega = "omega" in cols
        has_label = "label" in cols
        order: list[str] = []
        rows: dict[str, dict[str, list]] = {}
        for lineno, row in enumerate(reader, start=2):
            gid = row["group_id"]
            try:
                x = [float(row[c]) for c in xcols]
                om = float(row["omega"]) if has_omega else None
                lab = int(row["label"]) if has_label else None
            except (TypeError, ValueError) as exc:
                raise DatasetFormatError(str(exc), lineno) from exc
            if not all(math.isfinite(v) for v in x) or (om is not None and not math.isfinite(om)):
                raise DatasetFormatError("non-finite value", lineno)
            if gid not in rows:
                order.append(gid)
                rows[gid] = {"x": [], "omega": [], "label": []}
            rows[gid]["x"].append(x)
            rows[gid]["omega"].append(om)
            rows[gid]["label"].append(lab)
    if not order:
        raise DatasetFormatError("no groups")
    groups = []
    for gid in order:
        r = rows[gid]
        labels = set(r["label"])
        if len(labels) > 1:
            raise DatasetFormatError(f"group {gid!r} has conflicting labels")
        label = labels.pop()
        groups.append(Group(gid, np.array(r["x"]),
                            np.array(r["omega"]) if has_omega else None,
                            None, None if label is None else bool(label)))
    return GroupDataset(tuple(groups), {"source": str(path)})


def load_dataset(path: str | Path) -> GroupDataset:
    if str(path).endswith(".csv"):
        return load_csv(path)
    return load_jsonl(path)


def pooled_points(groups: Iterable[Group]) -> np.ndarray:
    pts = [g.points for g in groups if g.points is not None]
    if not pts:
        raise ValueError("no point samples in the given groups")
    return np.concatenate(pts, axis=0)
