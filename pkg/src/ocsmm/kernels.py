"""Kernels on points and on distributions (kernel mean embeddings).

Level 1 is the inner product of mean embeddings under a Gaussian RBF base
kernel, either estimated from samples or computed in closed form for Gaussian
inputs. Level 2 optionally applies an RBF on top of the embedding distances.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .data import Group

LEVEL1 = ("empirical", "analytic")
LEVEL2 = ("linear", "rbf")
GAMMA_PRESETS = ("median", "sigma")
PSD_JITTERS = (0.0, 1e-12, 1e-10, 1e-9)


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BaseKernel:
    """Gaussian RBF ``exp(-|x - y|^2 / (2 sigma^2))``."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def __call__(self, x, y) -> float:
        return rbf_eval(x, y, self.sigma)

    def gram(self, X, Y=None) -> np.ndarray:
        return rbf_gram(X, X if Y is None else Y, self.sigma)


@dataclass(frozen=True)
class GroupKernelSpec:
    """Which distribution kernel to use.

    ``sigma=None`` and ``gamma=None`` are resolved from training data by
    :func:`resolve_spec` (median heuristic / ``gamma_preset``).
    """

    level1: str = "empirical"
    level2: str = "linear"
    sigma: float | None = None
    gamma: float | None = None
    gamma_preset: str = "median"
    normalize: bool = False

    def __post_init__(self):
        if self.level1 not in LEVEL1:
            raise ValueError(f"level1 must be one of {LEVEL1}, got {self.level1!r}")
        if self.level2 not in LEVEL2:
            raise ValueError(f"level2 must be one of {LEVEL2}, got {self.level2!r}")
        if self.gamma_preset not in GAMMA_PRESETS:
            raise ValueError(f"gamma_preset must be one of {GAMMA_PRESETS}")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def resolved(self) -> bool:
        return self.sigma is not None and (self.level2 == "linear" or self.gamma is not None)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GroupKernelSpec":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    entries: np.ndarray
    spec: GroupKernelSpec
    self_inner: np.ndarray  # level-1 <mu_i, mu_i>, before normalization
    jitter: float = 0.0  # smallest diagonal jitter for which Cholesky succeeds

    @property
    def shape(self):
        return self.entries.shape


def rbf_eval(x, y, sigma: float) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    d2 = float(np.sum((x - y) ** 2))
    return float(np.exp(-d2 / (2.0 * sigma**2)))


def rbf_gram(X, Y, sigma: float) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    return np.exp(-cdist(X, Y, "sqeuclidean") / (2.0 * sigma**2))


def _sigma_of(base: BaseKernel | float) -> float:
    sigma = base.sigma if isinstance(base, BaseKernel) else float(base)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return sigma


def _canonical_pair(a, b, key_a: bytes, key_b: bytes):
    # fixed argument order makes K(P, Q) and K(Q, P) bit-identical
    if (len(a), key_a) <= (len(b), key_b):
        return a, b, False
    return b, a, True


def emp_mean_inner(S_i, S_j, base: BaseKernel | float) -> float:
    """Double average of the base kernel over two sample sets."""
    sigma = _sigma_of(base)
    A = np.atleast_2d(np.asarray(S_i, dtype=np.float64))
    B = np.atleast_2d(np.asarray(S_j, dtype=np.float64))
    if A.size == 0 or B.size == 0:
        raise ValueError("empty group")
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    A, B, _ = _canonical_pair(A, B, A.tobytes(), B.tobytes())
    k = np.exp(-cdist(A, B, "sqeuclidean") / (2.0 * sigma**2))
    # contiguous 1-D np.sum is pairwise summation
    return float(np.sum(k.ravel()) / (A.shape[0] * B.shape[0]))


def _as_gaussian(g) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(g, "mean") and hasattr(g, "cov"):
        return np.atleast_1d(np.asarray(g.mean, float)), np.atleast_2d(np.asarray(g.cov, float))
    mean, cov = g
    return np.atleast_1d(np.asarray(mean, float)), np.atleast_2d(np.asarray(cov, float))


def _full_cov_block(ma, Sa, mb, Sb, sigma: float) -> np.ndarray:
    """Closed-form <mu_a, mu_b> for every pair of Gaussian components."""
    d = ma.shape[1]
    B = Sa[:, None] + Sb[None, :] + sigma**2 * np.eye(d)
    diff = ma[:, None, :] - mb[None, :, :]
    try:
        sol = np.linalg.solve(B, diff[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular covariance sum in analytic kernel") from exc
    quad = np.einsum("abi,abi->ab", diff, sol)
    sign, logdet = np.linalg.slogdet(B)
    if np.any(sign <= 0):
        raise NumericalError("non-positive determinant in analytic kernel")
    return np.exp(-0.5 * quad - 0.5 * (logdet - d * np.log(sigma**2)))


def _iso_block(ma, wa, mb, wb, sigma: float) -> np.ndarray:
    d = ma.shape[1]
    s2 = sigma**2
    s = s2 + (wa[:, None] + wb[None, :])
    return np.exp(-cdist(ma, mb, "sqeuclidean") / (2.0 * s)) * (s2 / s) ** (d / 2)


def gaussian_analytic_inner(g_i, g_j, sigma: float) -> float:
    """Closed-form <mu_P, mu_Q> for Gaussians P, Q under an RBF base kernel.

    Accepts :class:`GaussianSummary` objects or ``(mean, cov)`` tuples.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    mi, Si = _as_gaussian(g_i)
    mj, Sj = _as_gaussian(g_j)
    if mi.shape != mj.shape or Si.shape != Sj.shape or Si.shape != (mi.size, mi.size):
        raise ValueError("dimension mismatch between Gaussian summaries")
    return float(_full_cov_block(mi[None], Si[None], mj[None], Sj[None], sigma)[0, 0])


def embedding_rbf(k_ii: float, k_jj: float, k_ij: float, gamma: float) -> float:
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if k_ii < 0 or k_jj < 0:
        raise ValueError("self inner products must be non-negative")
    d2 = k_ii - 2.0 * k_ij + k_jj
    if d2 < -1e-12:
        raise NumericalError(f"negative squared RKHS distance {d2:.3g}")
    return float(np.exp(-max(d2, 0.0) / (2.0 * gamma**2)))


def spherical_normalize(gram):
    """Cosine-normalize a Gram matrix so every embedding has unit norm."""
    G = gram.entries if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=np.float64)
    diag = np.diag(G).copy()
    if np.any(~(diag > 0)):
        raise ValueError("spherical normalization needs strictly positive diagonal")
    root = np.sqrt(diag)
    out = G / np.outer(root, root)
    np.fill_diagonal(out, 1.0)
    if isinstance(gram, GramMatrix):
        return replace(gram, entries=out)
    return out


# -- group-level assembly ---------------------------------------------------


class _Components:
    """A group seen as a uniform mixture of Gaussian components."""

    __slots__ = ("means", "iso", "full", "key")

    def __init__(self, g: Group):
        if g.summary is not None:
            self.means = g.summary.mean[None, :]
            self.iso = None
            self.full = g.summary.cov[None]
        else:
            self.means = g.points
            om = g.omega
            if om is None:
                self.iso, self.full = np.zeros(len(g.points)), None
            elif om.ndim == 1:
                self.iso, self.full = om, None
            else:
                self.iso, self.full = None, om
        cov = self.iso if self.iso is not None else self.full
        self.key = self.means.tobytes() + cov.tobytes()

    def __len__(self):
        return self.means.shape[0]

    def covs(self) -> np.ndarray:
        if self.full is not None:
            return self.full
        d = self.means.shape[1]
        return self.iso[:, None, None] * np.eye(d)


def _analytic_pair(a: _Components, b: _Components, sigma: float) -> float:
    a, b, _ = _canonical_pair(a, b, a.key, b.key)
    if a.iso is not None and b.iso is not None:
        k = _iso_block(a.means, a.iso, b.means, b.iso, sigma)
    else:
        k = _full_cov_block(a.means, a.covs(), b.means, b.covs(), sigma)
    return float(np.sum(k.ravel()) / (len(a) * len(b)))


def _check_compatible(groups: Sequence[Group], spec: GroupKernelSpec):
    if spec.level1 == "empirical":
        for g in groups:
            if g.points is None:
                raise ValueError(f"group {g.id!r} has no samples; the empirical kernel needs points")


def _n_threads() -> int:
    raw = os.environ.get("OCSMM_THREADS")
    cap = int(raw) if raw else (os.cpu_count() or 1)
    return max(1, min(cap, os.cpu_count() or 1))


def _all_singletons(groups: Sequence[Group], spec: GroupKernelSpec) -> bool:
    for g in groups:
        if g.points is None or g.points.shape[0] != 1:
            return False
        if spec.level1 == "analytic" and (g.summary is not None or (g.omega is not None and g.omega.ndim != 1)):
            return False
    return True


def _singleton_block(A: Sequence[Group], B: Sequence[Group], spec: GroupKernelSpec) -> np.ndarray:
    XA = np.concatenate([g.points for g in A])
    XB = np.concatenate([g.points for g in B])
    if spec.level1 == "empirical":
        return rbf_gram(XA, XB, spec.sigma)
    wa = np.array([0.0 if g.omega is None else g.omega[0] for g in A])
    wb = np.array([0.0 if g.omega is None else g.omega[0] for g in B])
    return _iso_block(XA, wa, XB, wb, spec.sigma)


def level1_matrix(A: Sequence[Group], B: Sequence[Group] | None, spec: GroupKernelSpec) -> np.ndarray:
    """Matrix of level-1 inner products <mu_a, mu_b>; ``B=None`` means ``B=A``."""
    if spec.sigma is None:
        raise ValueError("spec.sigma is unresolved; call resolve_spec first")
    symmetric = B is None
    B = A if B is None else B
    if not A or not B:
        raise ValueError("empty group list")
    dims = {g.dim for g in A} | {g.dim for g in B}
    if len(dims) != 1:
        raise ValueError(f"inconsistent dimensions: {sorted(dims)}")
    _check_compatible(A, spec)
    _check_compatible(B, spec)
    if _all_singletons(A, spec) and _all_singletons(B, spec):
        return _singleton_block(A, B, spec)

    sigma = spec.sigma
    if spec.level1 == "empirical":
        ca, cb = [g.points for g in A], [g.points for g in B]
        pair = lambda a, b: emp_mean_inner(a, b, sigma)  # noqa: E731
    else:
        ca = [_Components(g) for g in A]
        cb = ca if symmetric else [_Components(g) for g in B]
        pair = lambda a, b: _analytic_pair(a, b, sigma)  # noqa: E731

    out = np.empty((len(A), len(B)))

    def row(i):
        start = i if symmetric else 0
        for j in range(start, len(B)):
            out[i, j] = pair(ca[i], cb[j])
        return i

    threads = _n_threads()
    if threads > 1 and len(A) > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(row, range(len(A))))
    else:
        for i in range(len(A)):
            row(i)
    if symmetric:
        iu = np.triu_indices(len(A), 1)
        out[iu[1], iu[0]] = out[iu]
    return out


def self_inner(groups: Sequence[Group], spec: GroupKernelSpec) -> np.ndarray:
    """Level-1 self inner products <mu_g, mu_g> (squared embedding norms)."""
    if spec.sigma is None:
        raise ValueError("spec.sigma is unresolved; call resolve_spec first")
    _check_compatible(groups, spec)
    if _all_singletons(groups, spec):
        return np.diag(_singleton_block(groups, groups, spec)).copy()
    if spec.level1 == "empirical":
        return np.array([emp_mean_inner(g.points, g.points, spec.sigma) for g in groups])
    comps = [_Components(g) for g in groups]
    return np.array([_analytic_pair(c, c, spec.sigma) for c in comps])


def _level2(L: np.ndarray, da: np.ndarray, db: np.ndarray, spec: GroupKernelSpec) -> np.ndarray:
    K = L
    if spec.normalize:
        if np.any(~(da > 0)) or np.any(~(db > 0)):
            raise ValueError("spherical normalization needs strictly positive self inner products")
        K = K / np.outer(np.sqrt(da), np.sqrt(db))
        da, db = np.ones_like(da), np.ones_like(db)
    if spec.level2 == "rbf":
        d2 = da[:, None] - 2.0 * K + db[None, :]
        if np.any(d2 < -1e-12):
            raise NumericalError(f"negative squared RKHS distance {d2.min():.3g}")
        K = np.exp(-np.clip(d2, 0.0, None) / (2.0 * spec.gamma**2))
    return K


def psd_jitter(K: np.ndarray) -> float:
    """Smallest jitter from PSD_JITTERS making ``K + jitter*I`` Cholesky-factorizable."""
    eye = np.eye(K.shape[0])
    for jitter in PSD_JITTERS:
        try:
            np.linalg.cholesky(K + jitter * eye)
            return jitter
        except np.linalg.LinAlgError:
            continue
    raise NumericalError(f"Gram matrix is not PSD within jitter {PSD_JITTERS[-1]}")


def gram_matrix(groups: Sequence[Group], spec: GroupKernelSpec, check_psd: bool = True) -> GramMatrix:
    """Distribution-level Gram matrix over a list of groups.

    The PSD check only records the jitter needed for Cholesky to succeed;
    entries are returned unmodified.
    """
    groups = list(groups)
    if not groups:
        raise ValueError("gram_matrix needs at least one group")
    if spec.level2 == "rbf" and spec.gamma is None:
        raise ValueError("spec.gamma is unresolved; call resolve_spec first")
    L = level1_matrix(groups, None, spec)
    diag = np.diag(L).copy()
    K = _level2(L, diag, diag, spec)
    if spec.normalize or spec.level2 == "rbf":
        np.fill_diagonal(K, 1.0)
    jitter = psd_jitter(K) if check_psd else 0.0
    return GramMatrix(K, spec, diag, jitter)


def cross_gram(train: Sequence[Group], train_self: np.ndarray, test: Sequence[Group],
               spec: GroupKernelSpec) -> np.ndarray:
    """Kernel values K(train_i, test_j); ``train_self`` are the level-1 self inner products."""
    L = level1_matrix(list(train), list(test), spec)
    test_self = self_inner(list(test), spec) if (spec.normalize or spec.level2 == "rbf") else None
    if test_self is None:
        return _level2(L, np.asarray(train_self), np.ones(len(test)), spec)
    return _level2(L, np.asarray(train_self), test_self, spec)


# -- bandwidth selection ----------------------------------------------------

_DIRECT_PAIRS = 4_000_000
_N_BINS = 1 << 14


def _pairwise_sq_median(X: np.ndarray) -> float:
    n = X.shape[0]
    m = n * (n - 1) // 2
    if m <= _DIRECT_PAIRS:
        return float(np.median(pdist(X, "sqeuclidean")))
    # exact two-pass selection: histogram of all pair distances, then
    # collect only the bins holding the middle order statistics
    top = float(np.sum((X.max(0) - X.min(0)) ** 2)) * (1 + 1e-9) + 1e-300
    width = top / _N_BINS
    block = max(1, _DIRECT_PAIRS // n)

    def chunks():
        for a in range(0, n - 1, block):
            b = min(n - 1, a + block)
            D = cdist(X[a:b], X[a + 1:], "sqeuclidean")
            rows = np.arange(a, b)[:, None]
            cols = np.arange(a + 1, n)[None, :]
            v = D[cols > rows]
            idx = np.minimum((v / width).astype(np.int64), _N_BINS - 1)
            yield v, idx

    counts = np.zeros(_N_BINS, dtype=np.int64)
    for _, idx in chunks():
        counts += np.bincount(idx, minlength=_N_BINS)
    k_lo, k_hi = (m - 1) // 2, m // 2
    cum = np.cumsum(counts)
    b_lo = int(np.searchsorted(cum, k_lo, side="right"))
    b_hi = int(np.searchsorted(cum, k_hi, side="right"))
    below = int(cum[b_lo - 1]) if b_lo > 0 else 0
    kept = [v[(idx >= b_lo) & (idx <= b_hi)] for v, idx in chunks()]
    vals = np.sort(np.concatenate(kept))
    return float(0.5 * (vals[k_lo - below] + vals[k_hi - below]))


def median_heuristic(groups: Sequence[Group] | np.ndarray) -> float:
    """Median squared distance over all distinct point pairs pooled across groups.

    Returns sigma^2; within-group pairs are included, self-pairs excluded.
    """
    if isinstance(groups, np.ndarray):
        X = np.atleast_2d(groups.astype(np.float64))
    else:
        pts = []
        for g in groups:
            pts.append(g.points if g.points is not None else g.summary.mean[None, :])
        X = np.concatenate(pts) if pts else np.empty((0, 1))
    if X.shape[0] < 2:
        raise ValueError("median heuristic needs at least 2 points")
    return _pairwise_sq_median(X)


def rkhs_median(L: np.ndarray) -> float:
    """Median squared RKHS distance between distinct embeddings, from a level-1 Gram."""
    n = L.shape[0]
    if n < 2:
        return 0.0
    d = np.diag(L)
    iu = np.triu_indices(n, 1)
    d2 = d[iu[0]] - 2.0 * L[iu] + d[iu[1]]
    return float(np.median(np.clip(d2, 0.0, None)))


def resolve_spec(spec: GroupKernelSpec, groups: Sequence[Group]) -> GroupKernelSpec:
    """Fill in sigma (median heuristic) and gamma (preset rule) from training groups."""
    groups = list(groups)
    sigma = spec.sigma
    if sigma is None:
        sigma2 = median_heuristic(groups) if sum(g.size for g in groups) >= 2 else 0.0
        sigma = float(np.sqrt(sigma2)) if sigma2 > 0 else 1.0
    spec = replace(spec, sigma=sigma)
    if spec.level2 == "rbf" and spec.gamma is None:
        if spec.gamma_preset == "sigma":
            gamma = sigma
        else:
            L = level1_matrix(groups, None, spec)
            if spec.normalize:
                L = spherical_normalize(L)
            med = rkhs_median(L)
            gamma = float(np.sqrt(med)) if med > 0 else sigma
        spec = replace(spec, gamma=gamma)
    return spec


__all__ = [
    "BaseKernel", "GroupKernelSpec", "GramMatrix", "NumericalError",
    "rbf_eval", "rbf_gram", "emp_mean_inner", "gaussian_analytic_inner", "embedding_rbf",
    "spherical_normalize", "gram_matrix", "cross_gram", "level1_matrix", "self_inner",
    "median_heuristic", "rkhs_median", "resolve_spec", "psd_jitter",
]
