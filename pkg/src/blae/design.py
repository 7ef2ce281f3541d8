"""Regularized G-optimal design by Frank-Wolfe on log det.

The design matrix for weights ``pi`` on arms ``x_1..x_n`` is

    V(pi) = (lam / c) * I + scale * sum_i pi_i x_i x_i^T

and the solver drives the worst-case leverage ``max_i x_i^T V^{-1} x_i``
below a certified threshold: ``(1 + tol) * design_bound(d, lam, c, scale)``.
The bound ``d*c / (d*lam + scale*c)`` is attained exactly by uniform
weights on an orthonormal arm set, so the certificate is tight there and
has slack on generic instances.

Maximizing log det V(pi) minimizes the worst leverage (the two programs
share their optimum). Each iteration moves toward the highest-leverage
vertex, or away from an over-weighted support arm when that direction is
steeper; the away steps avoid the slow sublinear tail of plain toward
steps near the optimum. Both step types use an exact line search: along
any segment the objective is sum_j log(1 + gamma * mu_j) for the
generalized eigenvalues mu_j of the direction against V, and its maximum
is the root of a monotone scalar derivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh, solve_triangular
from scipy.optimize import brentq

from .core import NORM_TOL

__all__ = [
    "DesignProblem",
    "DesignWeights",
    "LeverageReport",
    "DesignConvergenceError",
    "design_bound",
    "leverage",
    "solve_design",
]

SIMPLEX_TOL = 1e-9


class DesignConvergenceError(RuntimeError):
    """Raised when the solver exhausts its iteration cap before certifying.

    Carries the best iterate found so that callers can inspect how far
    from the certificate it stopped.
    """

    def __init__(
        self,
        weights: np.ndarray,
        max_leverage: float,
        threshold: float,
        context: str = "",
    ):
        self.weights = weights
        self.max_leverage = max_leverage
        self.threshold = threshold
        self.context = context
        gap = max_leverage - threshold
        where = f" [{context}]" if context else ""
        super().__init__(
            f"design solver did not certify: max leverage {max_leverage:.6g} "
            f"exceeds threshold {threshold:.6g} (gap {gap:.3g}){where}"
        )


@dataclass(frozen=True)
class DesignWeights:
    """A point on the probability simplex over the problem's arms."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty vector")
        if np.any(w < -SIMPLEX_TOL):
            raise ValueError(f"weights must be >= 0, min is {w.min():.3g}")
        total = float(w.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total!r}")
        w = np.clip(w, 0.0, None)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class DesignProblem:
    """Arms and scaling for one batch's design.

    ``c`` is the exploration fraction in (0, 1] and ``scale`` the batch
    budget; both enter V(pi) = (lam/c) I + scale * sum pi x x^T.
    """

    features: np.ndarray
    lam: float
    c: float
    scale: float

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"features must be a non-empty 2-d array, got {X.shape}")
        norms = np.linalg.norm(X, axis=1)
        if norms.max() > 1.0 + NORM_TOL:
            raise ValueError(f"arm norms must be <= 1, max is {norms.max():.6g}")
        if self.lam <= 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if not 0.0 < self.c <= 1.0:
            raise ValueError(f"c must lie in (0, 1], got {self.c}")
        if self.scale <= 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")
        X.flags.writeable = False
        object.__setattr__(self, "features", X)

    @property
    def n_arms(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def matrix(self, weights: np.ndarray) -> np.ndarray:
        """Assemble V(pi)."""
        X = self.features
        return (self.lam / self.c) * np.eye(self.dim) + self.scale * (
            X.T @ (np.asarray(weights)[:, None] * X)
        )

    def bound(self) -> float:
        return design_bound(self.dim, self.lam, self.c, self.scale)


@dataclass(frozen=True)
class LeverageReport:
    max_leverage: float
    per_arm: np.ndarray


def design_bound(d: int, lam: float, c: float, scale: float) -> float:
    """Certified worst-case leverage ``d*c / (d*lam + scale*c)``.

    This is the level the log-det maximizer is guaranteed to reach for
    any arm set inside the unit ball; uniform weights on an orthonormal
    basis attain it exactly.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if lam <= 0 or scale <= 0 or not 0.0 < c <= 1.0:
        raise ValueError(f"invalid parameters lam={lam}, c={c}, scale={scale}")
    return d * c / (d * lam + scale * c)


def leverage(problem: DesignProblem, weights: np.ndarray | DesignWeights) -> LeverageReport:
    """Per-arm leverage ``x^T V(pi)^{-1} x`` and its maximum."""
    if isinstance(weights, DesignWeights):
        weights = weights.weights
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (problem.n_arms,):
        raise ValueError(f"weights shape {w.shape} does not match {problem.n_arms} arms")
    V = problem.matrix(w)
    sol = cho_solve(cho_factor(V, lower=True, check_finite=False), problem.features.T,
                    check_finite=False)
    per_arm = np.einsum("ij,ji->i", problem.features, sol)
    return LeverageReport(max_leverage=float(per_arm.max()), per_arm=per_arm)


def _line_search(V: np.ndarray, direction: np.ndarray, gamma_max: float) -> float:
    """Maximize log det(V + gamma * direction) over [0, gamma_max].

    Reduces to sum_j log(1 + gamma * mu_j) with mu_j the eigenvalues of
    L^{-1} direction L^{-T} (V = L L^T); the derivative
    sum_j mu_j / (1 + gamma mu_j) is decreasing, so a sign check at the
    ends plus a bracketed root find gives the exact step.
    """
    L = np.linalg.cholesky(V)
    B = solve_triangular(L, direction, lower=True, check_finite=False)
    B = solve_triangular(L, B.T, lower=True, check_finite=False)
    mu = eigh(0.5 * (B + B.T), eigvals_only=True, check_finite=False)

    def slope(g: float) -> float:
        return float(np.sum(mu / (1.0 + g * mu)))

    if slope(0.0) <= 0.0:
        return 0.0
    # keep 1 + gamma*mu_j bounded away from 0 at the right end
    hi = gamma_max
    mu_min = float(mu.min())
    if mu_min < 0.0:
        hi = min(hi, -(1.0 - 1e-12) / mu_min)
    if hi <= 0.0:
        return 0.0
    if slope(hi) >= 0.0:
        return hi
    return float(brentq(slope, 0.0, hi, xtol=1e-14, rtol=1e-12))


def solve_design(
    problem: DesignProblem,
    tol: float = 1e-3,
    max_iters: int | None = None,
) -> DesignWeights:
    """Find weights whose worst leverage is within ``(1 + tol)`` of the bound.

    Frank-Wolfe with away steps and exact line search, started from
    uniform weights. Stops as soon as
    ``max leverage <= (1 + tol) * design_bound(...)``; raises
    :class:`DesignConvergenceError` with the best iterate if the
    iteration cap is hit first.

    The iterate's objective never decreases (the line search only
    accepts improving steps), and arms never receive negative weight.
    """
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    n, d = problem.n_arms, problem.dim
    if max_iters is None:
        max_iters = 10 * n * d
    threshold = (1.0 + tol) * problem.bound()
    X = problem.features
    ridge = (problem.lam / problem.c) * np.eye(d)
    s = problem.scale

    w = np.full(n, 1.0 / n)
    best_w, best_lev = w.copy(), np.inf
    V = problem.matrix(w)
    for k in range(max_iters + 1):
        cho = cho_factor(V, lower=True, check_finite=False)
        sol = cho_solve(cho, X.T, check_finite=False)
        lev = np.einsum("ij,ji->i", X, sol)
        max_lev = float(lev.max())
        if max_lev < best_lev:
            best_lev, best_w = max_lev, w.copy()
        if max_lev <= threshold:
            return DesignWeights(weights=w / w.sum())
        if k == max_iters:
            break

        # gradient of log det V wrt pi_i is s * lev_i; compare the toward
        # step (mass onto the worst arm) with the away step (mass off the
        # weakest supported arm)
        avg = float(lev @ w)
        i_to = int(np.argmax(lev))
        gap_to = lev[i_to] - avg
        support = np.flatnonzero(w > 1e-15)
        j_away = int(support[np.argmin(lev[support])])
        gap_away = avg - lev[j_away]

        if gap_to >= gap_away:
            # move toward vertex i_to: V <- V + g * (W_i - V)
            W_i = ridge + s * np.outer(X[i_to], X[i_to])
            direction = W_i - V
            g = _line_search(V, direction, 1.0)
            if g <= 0.0:
                g = 2.0 / (k + 2.0)
            w *= 1.0 - g
            w[i_to] += g
        else:
            # move away from vertex j_away: V <- V + g * (V - W_j)
            W_j = ridge + s * np.outer(X[j_away], X[j_away])
            direction = V - W_j
            g_max = w[j_away] / (1.0 - w[j_away]) if w[j_away] < 1.0 else 1.0
            g = _line_search(V, direction, g_max)
            if g <= 0.0:
                g = min(2.0 / (k + 2.0), g_max)
            w *= 1.0 + g
            w[j_away] -= g
            np.clip(w, 0.0, None, out=w)
        w /= w.sum()
        V = problem.matrix(w)

    raise DesignConvergenceError(best_w, best_lev, threshold)
