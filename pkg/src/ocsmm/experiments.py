"""Experiment protocols shared by the acceptance suite and ``scripts/``.

Each ``*_trial`` function runs one seed end to end and returns a flat dict
suitable for :func:`ocsmm.evaluation.write_table`.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.special import i0e

from . import synth
from .data import Group, GroupDataset
from .density import DensityModel
from .evaluation import GridSpec, density_ise, roc_auc
from .kernels import GroupKernelSpec, median_heuristic
from .model import fit, score_dataset

DETECTION_SPEC = GroupKernelSpec(level1="empirical", level2="linear")
SHAPE_GRID = GridSpec((-3.5, -3.5), (3.5, 3.5), 141)
HISTOGRAM_SAMPLES = 1_000_000


def _detect(groups, nu: float, spec: GroupKernelSpec = DETECTION_SPEC):
    unlabeled = [g.without_label() for g in groups]
    model = fit(unlabeled, spec, nu)
    return model, score_dataset(model, unlabeled)


def rotated_trial(seed: int, nu: float = 0.1) -> dict:
    """Rotated-covariance groups: are the labeled anomalies ranked lowest?"""
    t0 = time.perf_counter()
    ds = synth.synth_rotated_gaussians(seed)
    labels = ds.labels
    model, scored = _detect(ds, nu)
    k = int(labels.sum())
    bottom = set(np.argsort(scored.decision, kind="stable")[:k].tolist())
    return {
        "seed": seed,
        "auc": roc_auc(-scored.decision, labels).auc,
        "anomalies_lowest": bottom == set(np.flatnonzero(labels).tolist()),
        "anomaly_ranks": " ".join(str(r) for r in scored.rank[labels]),
        "sigma": model.spec.sigma,
        "seconds": time.perf_counter() - t0,
    }


def mixture_trial(seed: int, nu: float = 0.1) -> dict:
    """Mixture-proportion groups: AUC of the fitted detector."""
    t0 = time.perf_counter()
    ds = synth.synth_mixture_groups(seed)
    model, scored = _detect(ds, nu)
    res = roc_auc(-scored.decision, ds.labels)
    return {"seed": seed, "nu": nu, "auc": res.auc, "ap": res.ap, "sigma": model.spec.sigma,
            "seconds": time.perf_counter() - t0}


def _collapse_to_means(ds: GroupDataset) -> GroupDataset:
    return GroupDataset(tuple(Group(g.id, g.points.mean(axis=0), label=g.label) for g in ds), ds.provenance)


def injection_trial(seed: int, count: int = 10, nu: float = 0.1) -> dict:
    """Aggregation anomalies injected into normal groups; OCSMM vs one-class SVM on group means."""
    t0 = time.perf_counter()
    base = synth.synth_rotated_gaussians(seed)
    normal = GroupDataset(tuple(g for g in base if not g.label), base.provenance)
    ds = synth.inject_aggregation_anomalies(normal, count, seed + 100)
    _, scored = _detect(ds, nu)
    _, scored_means = _detect(_collapse_to_means(ds), nu)
    auc = roc_auc(-scored.decision, ds.labels).auc
    auc_means = roc_auc(-scored_means.decision, ds.labels).auc
    return {"seed": seed, "auc_ocsmm": auc, "auc_means": auc_means, "ocsmm_better": auc > auc_means,
            "seconds": time.perf_counter() - t0}


def circle_truth(Y: np.ndarray, noise_var: float = synth.SHAPE_NOISE_VAR) -> np.ndarray:
    """Density of a uniform angle on the unit circle plus N(0, noise_var I)."""
    r = np.linalg.norm(Y, axis=1)
    s = noise_var
    return np.exp(-((r - 1) ** 2) / (2 * s)) * i0e(r / s) / (2 * np.pi * s)


def histogram_truth(sampler, grid: GridSpec, seed: int, n: int = HISTOGRAM_SAMPLES):
    """Piecewise-constant density from ``n`` samples, one bin centred on each grid node."""
    X = sampler(np.random.default_rng(seed), n)
    edges = []
    for ax in grid.axes:
        h = ax[1] - ax[0]
        edges.append(np.concatenate([ax - h / 2, [ax[-1] + h / 2]]))
    counts, _, _ = np.histogram2d(X[:, 0], X[:, 1], bins=edges)
    cell = (edges[0][1] - edges[0][0]) * (edges[1][1] - edges[1][0])
    table = counts / (n * cell)

    def truth(Y):
        ix = np.clip(np.searchsorted(edges[0], Y[:, 0], side="right") - 1, 0, table.shape[0] - 1)
        iy = np.clip(np.searchsorted(edges[1], Y[:, 1], side="right") - 1, 0, table.shape[1] - 1)
        return table[ix, iy]

    return truth


def shape_trial(shape: str, seed: int, n: int = 500, sigma: float | None = None,
                grid: GridSpec = SHAPE_GRID) -> dict:
    """ISE of the uncertainty-aware estimate vs a fixed KDE that ignores omega.

    Both use the same bandwidth, the median heuristic on the observed points
    unless ``sigma`` is given. The truth is the density before corruption.
    """
    t0 = time.perf_counter()
    if shape == "circle":
        ds = synth.synth_noisy_circle(seed, n)
        truth = circle_truth
    elif shape == "flower":
        ds = synth.synth_noisy_flower(seed, n)
        truth = histogram_truth(synth.flower_clean, grid, seed + 10_000)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    groups = list(ds)
    X = np.concatenate([g.points for g in groups])
    if sigma is None:
        sigma = float(np.sqrt(median_heuristic(X)))
    model = fit(groups, GroupKernelSpec(level1="analytic", sigma=sigma), nu=1.0)
    ocsmm = DensityModel("ocsmm", model=model)
    kde = DensityModel("kde", centers=X, h=sigma)
    ise_ocsmm = density_ise(ocsmm, truth, grid)
    ise_kde = density_ise(kde, truth, grid)
    return {"shape": shape, "seed": seed, "sigma": sigma, "ise_ocsmm": ise_ocsmm, "ise_kde": ise_kde,
            "ocsmm_better": ise_ocsmm < ise_kde, "seconds": time.perf_counter() - t0}
