"""One-class dual QP over a precomputed Gram matrix.

    minimize    1/2 a^T K a
    subject to  0 <= a_i <= 1/(nu l),  sum_i a_i = 1

solved by SMO with maximal-violating-pair working sets. An exhaustive
active-set solver is included as a test oracle for small problems.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernels import NumericalError

ALPHA_ZERO_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DualProblem:
    gram: np.ndarray
    nu: float
    tol: float = 1e-6
    max_iter: int = 10_000_000

    def __post_init__(self):
        K = np.asarray(getattr(self.gram, "entries", self.gram), dtype=np.float64)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] < 1:
            raise ValueError(f"gram must be a non-empty square matrix, got shape {K.shape}")
        if not np.all(np.isfinite(K)):
            raise ValueError("gram contains NaN or infinite entries")
        if not np.allclose(K, K.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(K).max())):
            raise ValueError("gram is not symmetric")
        if not (0.0 < self.nu <= 1.0):
            raise ValueError(f"nu must lie in (0, 1], got {self.nu}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        object.__setattr__(self, "gram", K)
        if self.nu * self.size < 1:
            warnings.warn(f"nu * l = {self.nu * self.size:.3g} < 1: the upper bound on alpha is inactive",
                          stacklevel=2)

    @property
    def size(self) -> int:
        return self.gram.shape[0]

    @property
    def upper(self) -> float:
        return 1.0 / (self.nu * self.size)


@dataclass(frozen=True, eq=False)
class DualSolution:
    alpha: np.ndarray
    rho: float
    objective: float
    iterations: int
    converged: bool
    max_violation: float
    upper: float
    objective_trace: tuple[float, ...] | None = field(default=None, repr=False)

    @property
    def sv_index(self) -> np.ndarray:
        return np.flatnonzero(self.alpha > ALPHA_ZERO_TOL)

    @property
    def bounded_sv_index(self) -> np.ndarray:
        return np.flatnonzero(self.alpha >= self.upper - ALPHA_ZERO_TOL)


def initial_alpha(size: int, nu: float) -> np.ndarray:
    upper = 1.0 / (nu * size)
    alpha = np.zeros(size)
    n_full = min(size, int(math.floor(nu * size)))
    alpha[:n_full] = upper
    if n_full < size:
        alpha[n_full] = max(0.0, 1.0 - n_full * upper)
    return alpha


def compute_rho(alpha, gram, nu: float, zero_tol: float = ALPHA_ZERO_TOL) -> float:
    """Offset from the KKT conditions.

    Averages ``f(i) = (K alpha)_i`` over free multipliers; without free ones,
    takes the midpoint of the feasible interval [max f(bounded), min f(zero)].
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.size == 0:
        raise ValueError("empty alpha")
    K = np.asarray(getattr(gram, "entries", gram), dtype=np.float64)
    f = K @ alpha
    upper = 1.0 / (nu * alpha.size)
    free = (alpha > zero_tol) & (alpha < upper - zero_tol)
    if np.any(free):
        return float(np.mean(f[free]))
    at_upper = alpha >= upper - zero_tol
    at_zero = alpha <= zero_tol
    if not np.any(at_upper):
        return float(np.mean(f[alpha > zero_tol]))
    if np.any(at_zero):
        return float(0.5 * (f[at_upper].max() + f[at_zero].min()))
    return float(f[at_upper].max())


def _max_violation(alpha, grad, upper) -> tuple[float, int, int]:
    up = np.flatnonzero(alpha < upper)
    low = np.flatnonzero(alpha > 0.0)
    if up.size == 0 or low.size == 0:
        return 0.0, -1, -1
    # argmin/argmax return the first (lowest) index on ties
    i = up[np.argmin(grad[up])]
    j = low[np.argmax(grad[low])]
    return float(grad[j] - grad[i]), int(i), int(j)


def solve_dual(problem: DualProblem, trace: bool = False) -> DualSolution:
    """SMO on the one-class dual.

    Each step moves mass ``t`` from ``j`` (largest gradient among alpha_j > 0)
    to ``i`` (smallest gradient among alpha_i < upper). Stops once
    ``grad_j - grad_i <= tol``; returns ``converged=False`` at ``max_iter``.
    With ``trace`` the objective after every update is recorded.
    """
    K = problem.gram
    n = problem.size
    upper = problem.upper
    alpha = initial_alpha(n, problem.nu)
    grad = K @ alpha
    history = [0.5 * float(alpha @ grad)] if trace else None

    iterations = 0
    converged = False
    violation = 0.0
    while True:
        violation, i, j = _max_violation(alpha, grad, upper)
        if violation <= problem.tol:
            converged = True
            break
        if iterations >= problem.max_iter:
            break
        curvature = K[i, i] + K[j, j] - 2.0 * K[i, j]
        room_i = upper - alpha[i]
        room_j = alpha[j]
        if curvature > 0:
            step = violation / curvature
        else:
            step = math.inf
        if step >= room_i and room_i <= room_j:
            step = room_i
            alpha[i] = upper
            alpha[j] -= step
            if alpha[j] < 0.0:
                alpha[j] = 0.0
        elif step >= room_j:
            step = room_j
            alpha[j] = 0.0
            alpha[i] += step
            if alpha[i] > upper:
                alpha[i] = upper
        else:
            alpha[i] += step
            alpha[j] -= step
        grad += step * (K[:, i] - K[:, j])
        iterations += 1
        if trace:
            history.append(0.5 * float(alpha @ K @ alpha))

    rho = compute_rho(alpha, K, problem.nu)
    return DualSolution(
        alpha=alpha,
        rho=rho,
        objective=0.5 * float(alpha @ K @ alpha),
        iterations=iterations,
        converged=converged,
        max_violation=max(violation, 0.0),
        upper=upper,
        objective_trace=tuple(history) if trace else None,
    )


# -- reference solver --------------------------------------------------------


def _kkt_point(K, pattern, upper, tol):
    """Candidate for one assignment of multipliers to {0, upper, free}; None if not optimal."""
    n = K.shape[0]
    at_upper = pattern == 1
    free = pattern == 2
    x = np.where(at_upper, upper, 0.0)
    nf = int(free.sum())
    if nf == 0:
        if abs(x.sum() - 1.0) > 1e-12:
            return None
    else:
        # K_FF a_F - rho 1 = -K_FU a_U,  sum a_F = 1 - sum a_U
        A = np.zeros((nf + 1, nf + 1))
        A[:nf, :nf] = K[np.ix_(free, free)]
        A[:nf, nf] = -1.0
        A[nf, :nf] = 1.0
        rhs = np.concatenate([-K[np.ix_(free, at_upper)] @ x[at_upper], [1.0 - x.sum()]])
        try:
            sol = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(sol)) or np.abs(A @ sol - rhs).max() > 1e-12 * max(1.0, np.abs(sol).max()):
            return None
        if np.any(sol[:nf] < -tol * upper) or np.any(sol[:nf] > upper * (1 + tol)):
            return None
        x[free] = np.clip(sol[:nf], 0.0, upper)
    g = K @ x
    scale = tol * max(1.0, np.abs(K).max())
    lo = g[pattern != 1].min() if np.any(pattern != 1) else np.inf  # can still rise
    hi = g[pattern != 0].max() if np.any(pattern != 0) else -np.inf  # can still fall
    return x if hi <= lo + scale else None


def _patterns(n: int, upper: float):
    """Assignments to {0: zero, 1: upper, 2: free}, fewest free multipliers first.

    Patterns whose bounded count already violates sum = 1 are skipped.
    """
    max_up = int(math.floor(1.0 / upper + 1e-9))
    for n_free in range(n + 1):
        for free in itertools.combinations(range(n), n_free):
            rest = [i for i in range(n) if i not in free]
            for n_up in range(min(max_up, len(rest)) + 1):
                if n_free == 0 and abs(n_up * upper - 1.0) > 1e-12:
                    continue
                for up in itertools.combinations(rest, n_up):
                    p = np.zeros(n, dtype=np.int8)
                    p[list(free)] = 2
                    p[list(up)] = 1
                    yield p


def brute_force_dual(problem: DualProblem, tol: float = 1e-9) -> DualSolution:
    """Exhaustive active-set reference solver for tiny problems (l <= 8).

    Tries every assignment of the multipliers to {0, upper, free}, solves
    the equality-constrained KKT system on the free block and returns the
    first point that is feasible and satisfies the optimality conditions.
    For a convex QP any such point is a global minimizer. With singular K
    some minimizer always has a nonsingular free block, so skipping
    singular systems loses nothing.
    """
    K = problem.gram
    n = problem.size
    if n > 8:
        raise ValueError("brute_force_dual is limited to l <= 8")
    upper = problem.upper
    tried = 0
    for pattern in _patterns(n, upper):
        tried += 1
        x = _kkt_point(K, pattern, upper, tol)
        if x is not None:
            rho = compute_rho(x, K, problem.nu)
            return DualSolution(x, rho, 0.5 * float(x @ K @ x), tried, True, 0.0, upper)
    raise NumericalError("no KKT point found; the Gram matrix is not positive semidefinite")
