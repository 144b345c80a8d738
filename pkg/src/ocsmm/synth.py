"""Synthetic group datasets.

All generators draw from numpy's ``PCG64`` bit generator seeded with the
given integer (``np.random.default_rng(seed)``), so a seed reproduces the
same dataset wherever the numpy ``Generator`` streams are stable.
"""

from __future__ import annotations

import numpy as np

from .data import Group, GroupDataset

GROUP_COV = np.array([[0.01, 0.008], [0.008, 0.01]])
MIXTURE_MEANS = np.array([[-1.0, -1.0], [1.0, -1.0], [0.0, 1.0], [1.0, 1.0]])
MIXTURE_COV_SCALE = 0.15
NORMAL_PROPORTIONS = np.array([[0.22, 0.64, 0.03, 0.11], [0.22, 0.03, 0.64, 0.11]])
NORMAL_TYPE_PROBS = np.array([0.48, 0.52])
ANOMALOUS_PROPORTIONS = np.array([0.61, 0.1, 0.06, 0.23])


def rotation(degrees: float) -> np.ndarray:
    t = np.deg2rad(degrees)
    return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])


def _gid(i: int) -> str:
    return f"g{i:03d}"


def synth_rotated_gaussians(seed: int, n_normal: int = 20, n_rotated: int = 2, n_points: int = 100,
                            angle: float = 60.0, offset=(2.0, 2.0)) -> GroupDataset:
    """Gaussian groups with a shared covariance, plus shape and location anomalies.

    ``n_normal`` groups use ``GROUP_COV`` with means uniform on the unit
    square; the first of them is shifted by ``offset`` and labeled anomalous.
    ``n_rotated`` more groups use the covariance rotated by ``angle`` degrees.
    """
    rng = np.random.default_rng(seed)
    R = rotation(angle)
    rotated_cov = R @ GROUP_COV @ R.T
    means = rng.uniform(0.0, 1.0, size=(n_normal + n_rotated, 2))
    perturbed = int(rng.integers(n_normal))
    groups = []
    for i in range(n_normal + n_rotated):
        is_rotated = i >= n_normal
        cov = rotated_cov if is_rotated else GROUP_COV
        mean = means[i] + (np.asarray(offset) if i == perturbed else 0.0)
        pts = rng.multivariate_normal(mean, cov, size=n_points, method="cholesky")
        groups.append(Group(_gid(i), pts, label=is_rotated or i == perturbed))
    prov = {"generator": "rotated", "seed": seed, "n_normal": n_normal, "n_rotated": n_rotated,
            "n_points": n_points, "angle": angle, "offset": list(offset), "perturbed": _gid(perturbed)}
    return GroupDataset(tuple(groups), prov)


def _poisson_size(rng: np.random.Generator, lam: float) -> int:
    while True:
        n = int(rng.poisson(lam))
        if n > 0:
            return n


def _mixture_group(rng, proportions, size) -> np.ndarray:
    comp = rng.choice(len(proportions), size=size, p=proportions)
    noise = rng.standard_normal((size, 2)) * np.sqrt(MIXTURE_COV_SCALE)
    return MIXTURE_MEANS[comp] + noise


def synth_mixture_groups(seed: int, n_normal: int = 47, n_anomalous: int = 3,
                         mean_size: float = 300.0) -> GroupDataset:
    """Groups drawn from a shared 4-component Gaussian mixture.

    Normal groups use one of two mixing proportions; anomalous groups use a
    third one. Group sizes are Poisson(``mean_size``), redrawn on zero.
    Anomalous groups are appended after the normal ones.
    """
    rng = np.random.default_rng(seed)
    groups = []
    for i in range(n_normal + n_anomalous):
        anomalous = i >= n_normal
        if anomalous:
            props = ANOMALOUS_PROPORTIONS
        else:
            props = NORMAL_PROPORTIONS[rng.choice(2, p=NORMAL_TYPE_PROBS)]
        size = _poisson_size(rng, mean_size)
        groups.append(Group(_gid(i), _mixture_group(rng, props, size), label=anomalous))
    prov = {"generator": "mixture", "seed": seed, "n_normal": n_normal,
            "n_anomalous": n_anomalous, "mean_size": mean_size}
    return GroupDataset(tuple(groups), prov)


# Noisy shapes: variances, not standard deviations.
SHAPE_NOISE_VAR = 0.05
OMEGA_RANGE = (0.2, 0.3)


def _corrupt(rng, clean: np.ndarray, shape: str, seed: int, noise_var: float, omega_range) -> GroupDataset:
    n = clean.shape[0]
    omega = rng.uniform(omega_range[0], omega_range[1], size=n)
    observed = clean + rng.standard_normal((n, 2)) * np.sqrt(omega)[:, None]
    groups = tuple(Group(_gid(i), observed[i:i + 1], omega[i:i + 1]) for i in range(n))
    prov = {"generator": shape, "seed": seed, "n": n, "noise_var": noise_var,
            "omega_range": list(omega_range)}
    return GroupDataset(groups, prov)


def circle_clean(rng: np.random.Generator, n: int, noise_var: float = SHAPE_NOISE_VAR) -> np.ndarray:
    theta = np.pi - rng.uniform(0.0, 2 * np.pi, size=n)  # (-pi, pi]
    base = np.column_stack([np.cos(theta), np.sin(theta)])
    return base + rng.standard_normal((n, 2)) * np.sqrt(noise_var)


def flower_radius(theta):
    return np.sin(4 * theta) + 2


def flower_clean(rng: np.random.Generator, n: int, noise_var: float = SHAPE_NOISE_VAR) -> np.ndarray:
    theta = 2 * np.pi - rng.uniform(0.0, 2 * np.pi, size=n)  # (0, 2 pi]
    r = flower_radius(theta)
    base = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    return base + rng.standard_normal((n, 2)) * np.sqrt(noise_var)


def synth_noisy_circle(seed: int, n: int = 500, noise_var: float = SHAPE_NOISE_VAR,
                       omega_range=OMEGA_RANGE) -> GroupDataset:
    """Unit circle with shape noise, then per-point corruption N(0, omega_i).

    Emits ``n`` single-point groups, each carrying its corruption variance.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    return _corrupt(rng, circle_clean(rng, n, noise_var), "circle", seed, noise_var, omega_range)


def synth_noisy_flower(seed: int, n: int = 500, noise_var: float = SHAPE_NOISE_VAR,
                       omega_range=OMEGA_RANGE) -> GroupDataset:
    """Curve r = sin(4 theta) + 2 with the same noise and corruption as the circle."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    return _corrupt(rng, flower_clean(rng, n, noise_var), "flower", seed, noise_var, omega_range)


def inject_aggregation_anomalies(dataset: GroupDataset, count: int, seed: int) -> GroupDataset:
    """Append ``count`` groups assembled from randomly chosen normal points.

    Points are sampled without replacement from the pool of all points in
    groups not labeled anomalous; each new group has the median normal
    group size and is labeled anomalous.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    normals = [g for g in dataset.groups if not g.label and g.points is not None]
    if not normals:
        raise ValueError("no normal groups with points to draw from")
    pool = np.concatenate([g.points for g in normals])
    size = int(np.median([g.size for g in normals]))
    if count * size > pool.shape[0]:
        raise ValueError(f"pool of {pool.shape[0]} points cannot fill {count} groups of {size}")
    rng = np.random.default_rng(seed)
    picks = rng.permutation(pool.shape[0])[: count * size].reshape(count, size)
    start = len(dataset.groups)
    new = tuple(Group(f"inj{start + k:03d}", pool[idx], label=True) for k, idx in enumerate(picks))
    prov = dict(dataset.provenance)
    prov["injected"] = {"count": count, "seed": seed, "size": size}
    return GroupDataset(dataset.groups + new, prov)


GENERATORS = {
    "rotated": synth_rotated_gaussians,
    "mixture": synth_mixture_groups,
    "circle": synth_noisy_circle,
    "flower": synth_noisy_flower,
}
