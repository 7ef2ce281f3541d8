"""Batched regularized least squares.

Each batch is summarized by its own Gram matrix ``H = lam*I + sum x x^T``
and moment vector ``b = sum r x`` over the batch's pulls only; estimates
never mix data across batches. Sums run in pull order so that repeated
runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "BatchData",
    "Estimate",
    "accumulate",
    "solve_rls",
    "best_response",
    "estimate_batch",
    "mahalanobis_inv",
    "max_pairwise_norm",
]


@dataclass(frozen=True)
class BatchData:
    """Sufficient statistics of one batch: H = lam*I + sum x x^T, b = sum r x."""

    H: np.ndarray
    b: np.ndarray
    n_pulls: int
    lam: float

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"H must be square, got shape {H.shape}")
        if b.shape != (H.shape[0],):
            raise ValueError("b must be a vector matching H")
        if not np.allclose(H, H.T, rtol=0.0, atol=1e-10):
            raise ValueError("H must be symmetric")
        if self.lam <= 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if self.n_pulls < 0:
            raise ValueError("n_pulls must be >= 0")

    @property
    def dim(self) -> int:
        return self.H.shape[0]


@dataclass(frozen=True)
class Estimate:
    """RLS estimate for one batch and the induced greedy arm choice."""

    theta_hat: np.ndarray
    best_arm: int  # position within the arm list the estimate was scored on


def accumulate(
    pulls: Iterable[tuple[np.ndarray, float]], lam: float, dim: int
) -> BatchData:
    """Build batch statistics from ``(feature, reward)`` pairs.

    Summation runs in pull order, one rank-one update per pull, so the
    result is reproducible bit-for-bit for a fixed pull sequence. Only
    the pulls passed in contribute; there is no carry-over state.

    Parameters
    ----------
    pulls : iterable of (x, r)
        Feature vector and observed reward for each pull, in pull order.
    lam : float
        Ridge weight, must be > 0. H starts at lam * I.
    dim : int
        Feature dimension (needed so an empty batch still has a shape).
    """
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    H = lam * np.eye(dim)
    b = np.zeros(dim)
    n = 0
    # consecutive pulls of the same arm object reuse its outer product;
    # the adds are the identical floats in the identical order either way
    last_ref = None
    x_arr = xx = None
    for x, r in pulls:
        if x is not last_ref:
            x_arr = np.asarray(x, dtype=np.float64)
            if x_arr.shape != (dim,):
                raise ValueError(f"pull {n}: feature shape {x_arr.shape} != ({dim},)")
            xx = np.multiply.outer(x_arr, x_arr)
            last_ref = x
        H += xx
        b += r * x_arr
        n += 1
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(b))):
        raise ArithmeticError("non-finite values in accumulated batch statistics")
    return BatchData(H=H, b=b, n_pulls=n, lam=lam)


def _chol(H: np.ndarray):
    try:
        return cho_factor(H, lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:  # pragma: no cover - H >= lam*I by construction
        raise ArithmeticError(f"batch Gram matrix is not positive definite: {e}") from e


def solve_rls(data: BatchData) -> np.ndarray:
    """Solve H theta = b by Cholesky. Never forms an explicit inverse."""
    theta = cho_solve(_chol(data.H), data.b, check_finite=False)
    if not np.all(np.isfinite(theta)):
        raise ArithmeticError("RLS solve produced non-finite estimate")
    return theta


def best_response(theta_hat: np.ndarray, features: np.ndarray) -> int:
    """Position of the arm maximizing <x, theta_hat>; lowest position wins ties."""
    scores = np.asarray(features) @ np.asarray(theta_hat)
    return int(np.argmax(scores))


def estimate_batch(data: BatchData, features: np.ndarray) -> Estimate:
    """RLS estimate plus the greedy arm among ``features`` (rows)."""
    theta = solve_rls(data)
    return Estimate(theta_hat=theta, best_arm=best_response(theta, features))


def mahalanobis_inv(H: np.ndarray, v: np.ndarray) -> float:
    """The norm sqrt(v^T H^{-1} v), computed through a solve."""
    H = np.asarray(H, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    q = float(v @ cho_solve(_chol(H), v, check_finite=False))
    # tiny negatives can appear for v ~ 0
    return float(np.sqrt(max(q, 0.0)))


def max_pairwise_norm(H: np.ndarray, features: Sequence[np.ndarray] | np.ndarray) -> float:
    """max over arm pairs (x, y) of ||x - y|| in the H^{-1} metric.

    One Cholesky factorization of H is shared across all pairs; the pair
    scan itself is the O(K^2) Gram trick
    ``||x - y||^2 = G_xx + G_yy - 2 G_xy`` with ``G = X H^{-1} X^T``.
    Returns 0.0 for a single arm.
    """
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if X.shape[0] < 2:
        return 0.0
    G = X @ cho_solve(_chol(np.asarray(H, dtype=np.float64)), X.T, check_finite=False)
    g = np.diag(G)
    sq = g[:, None] + g[None, :] - 2.0 * G
    return float(np.sqrt(max(float(sq.max()), 0.0)))
