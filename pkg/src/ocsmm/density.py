"""Kernel density estimators and their one-class counterparts.

With nu = 1 every training measure gets weight 1/n, so the fitted one-class
machine on Gaussian groups N(x_i, s_i^2 I) evaluated against a test measure
N(y, t^2 I) is, up to the constant (2 pi sigma^2)^(d/2), the mixture

    (1/n) sum_i N(y; x_i, (sigma^2 + s_i^2 + t^2) I).

Fixed-bandwidth KDE (s_i = t = 0), the balloon estimator (t > 0) and the
sample-smoothing estimator (varying s_i) are all special cases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .data import Group
from .model import OcsmmModel

_BLOCK = 4096


def _queries(y) -> tuple[np.ndarray, bool]:
    Y = np.asarray(y, dtype=np.float64)
    single = Y.ndim <= 1
    return np.atleast_2d(Y), single


def _centers(centers) -> np.ndarray:
    X = np.asarray(centers, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 1:
        raise ValueError("need at least one center")
    return X


def gaussian_mixture_density(centers, variances, y, weights=None):
    """sum_i w_i N(y; x_i, v_i I) with uniform weights by default."""
    X = _centers(centers)
    n, d = X.shape
    v = np.broadcast_to(np.asarray(variances, dtype=np.float64), (n,))
    if np.any(~(v > 0)):
        raise ValueError("variances must be positive")
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=np.float64)
    Y, single = _queries(y)
    if Y.shape[1] != d:
        raise ValueError(f"query dimension {Y.shape[1]} differs from centers {d}")
    coef = w / (2 * np.pi * v) ** (d / 2)
    out = np.empty(Y.shape[0])
    for a in range(0, Y.shape[0], _BLOCK):
        D = cdist(Y[a:a + _BLOCK], X, "sqeuclidean")
        out[a:a + _BLOCK] = np.exp(-D / (2 * v)) @ coef
    return float(out[0]) if single else out


def kde_eval(centers, h: float, y):
    """Fixed-bandwidth Gaussian KDE, (1/n) sum_i N(y; x_i, h^2 I)."""
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    return gaussian_mixture_density(centers, h**2, y)


def vkde_sample_smoothing(centers, sigmas, y):
    """Sample-smoothing estimator: bandwidth ``sigmas[i]`` attached to center ``i``."""
    X = _centers(centers)
    s = np.asarray(sigmas, dtype=np.float64)
    if s.shape != (X.shape[0],):
        raise ValueError(f"expected {X.shape[0]} bandwidths, got shape {s.shape}")
    if np.any(~(s > 0)):
        raise ValueError("bandwidths must be positive")
    return gaussian_mixture_density(X, s**2, y)


def vkde_balloon(centers, base_sigma: float, test_sigma: float, y):
    """Balloon estimator: the query's own uncertainty widens every kernel."""
    if not base_sigma > 0 or test_sigma < 0:
        raise ValueError("need base_sigma > 0 and test_sigma >= 0")
    return gaussian_mixture_density(centers, base_sigma**2 + test_sigma**2, y)


def _check_density_model(model: OcsmmModel):
    spec = model.spec
    if spec.level1 != "analytic" or spec.level2 != "linear" or spec.normalize:
        raise ValueError("density evaluation needs an analytic, linear, unnormalized kernel spec")


def ocsmm_density(model: OcsmmModel, test_sigma: float, y, normalized: bool = True):
    """sum_i alpha_i K(P_i, N(y, test_sigma^2 I)); the offset rho is not used.

    With ``normalized`` the value is divided by (2 pi sigma^2)^(d/2), which
    turns each analytic kernel term into a proper Gaussian density.
    """
    _check_density_model(model)
    if test_sigma < 0:
        raise ValueError("test_sigma must be non-negative")
    sigma = model.spec.sigma
    s2 = sigma**2
    Y, single = _queries(y)
    d = model.dim
    if Y.shape[1] != d:
        raise ValueError(f"query dimension {Y.shape[1]} differs from model dimension {d}")
    t2 = test_sigma**2
    out = np.zeros(Y.shape[0])
    iso_means, iso_vars, iso_w = [], [], []
    for alpha, g in zip(model.alpha, model.support_groups):
        means, covs = _group_components(g)
        w = alpha / means.shape[0]
        if covs.ndim == 1:
            iso_means.append(means)
            iso_vars.append(covs)
            iso_w.append(np.full(means.shape[0], w))
            continue
        for m, S in zip(means, covs):
            B = S + (s2 + t2) * np.eye(d)
            diff = Y - m
            quad = np.einsum("ij,ij->i", diff, np.linalg.solve(B, diff.T).T)
            logdet = np.linalg.slogdet(B)[1]
            out += w * np.exp(-0.5 * quad - 0.5 * (logdet - d * np.log(s2)))
    if iso_means:
        M = np.concatenate(iso_means)
        v = s2 + t2 + np.concatenate(iso_vars)
        coef = np.concatenate(iso_w) * (s2 / v) ** (d / 2)
        for a in range(0, Y.shape[0], _BLOCK):
            D = cdist(Y[a:a + _BLOCK], M, "sqeuclidean")
            out[a:a + _BLOCK] += np.exp(-D / (2 * v)) @ coef
    if normalized:
        out /= (2 * np.pi * s2) ** (d / 2)
    return float(out[0]) if single else out


def _group_components(g: Group) -> tuple[np.ndarray, np.ndarray]:
    if g.summary is not None:
        return g.summary.mean[None, :], g.summary.cov[None]
    if g.omega is None:
        return g.points, np.zeros(g.points.shape[0])
    return g.points, g.omega


@dataclass(frozen=True, eq=False)
class DensityModel:
    """A density estimator ready for evaluation on query points.

    kind: ``"kde"`` (``h``), ``"balloon"`` (``h`` and ``test_sigma``),
    ``"sample_smoothing"`` (``sigmas``) or ``"ocsmm"`` (``model`` and
    ``test_sigma``).
    """

    kind: str
    centers: np.ndarray | None = None
    h: float | None = None
    sigmas: np.ndarray | None = None
    test_sigma: float = 0.0
    model: OcsmmModel | None = None
    normalized: bool = True

    def __post_init__(self):
        if self.kind not in ("kde", "balloon", "sample_smoothing", "ocsmm"):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.kind == "ocsmm":
            if self.model is None:
                raise ValueError("ocsmm density needs a fitted model")
            _check_density_model(self.model)
        elif self.centers is None:
            raise ValueError(f"{self.kind} density needs centers")
        if self.kind in ("kde", "balloon") and not (self.h and self.h > 0):
            raise ValueError("bandwidth h must be positive")
        if self.kind == "sample_smoothing" and self.sigmas is None:
            raise ValueError("sample_smoothing needs per-center bandwidths")
        if self.test_sigma < 0:
            raise ValueError("test_sigma must be non-negative")
        if self.kind != "ocsmm" and not self.normalized:
            raise ValueError("only the ocsmm density has an unnormalized form")

    def __call__(self, y):
        if self.kind == "kde":
            return kde_eval(self.centers, self.h, y)
        if self.kind == "balloon":
            return vkde_balloon(self.centers, self.h, self.test_sigma, y)
        if self.kind == "sample_smoothing":
            return vkde_sample_smoothing(self.centers, self.sigmas, y)
        return ocsmm_density(self.model, self.test_sigma, y, self.normalized)
