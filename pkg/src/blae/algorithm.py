"""Batched linear bandit with arm elimination.

One run is a short sequence of batches. Each batch solves a regularized
G-optimal design over the surviving arms, pulls per the rounded design
(reserving a 1-c fraction of the budget for the current best guess),
fits a regularized least-squares estimate on that batch's data alone,
and keeps only the arms whose estimated gap to the batch's best arm is
within a data-dependent threshold. Budgets grow doubly exponentially, so
a horizon-T run finishes within 1 + ceil(log2 log2 T) batches.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (
    COVERING_ZETA,
    BanditInstance,
    RunTrace,
    batch_budget,
    batch_count_bound,
    checkpoint_rounds,
)
from .design import DesignConvergenceError, DesignProblem, solve_design
from .envsim import Environment
from .estimator import (
    BatchData,
    Estimate,
    accumulate,
    best_response,
    max_pairwise_norm,
    solve_rls,
)

__all__ = [
    "BLAEConfig",
    "BatchState",
    "beta1",
    "beta2",
    "epsilon_threshold",
    "allocate",
    "eliminate",
    "run_blae",
]

# (zeta^2 - zeta^4/4) at the fixed cover parameter: the per-dimension
# factor in the cover-size bound entering beta1. Equals 15/64.
_PACKING_CONST = COVERING_ZETA**2 - COVERING_ZETA**4 / 4.0


def beta1(d: int, T: int, lam: float, delta: float) -> float:
    """Cover-based confidence radius multiplier.

    ``2*sqrt(ln(8*pi*d*L**2 / ((15/64)**(d-1) * delta**2))) + 2*sqrt(lam)``
    with ``L = 1 + ceil(log2 log2 T)`` the batch-count limit. Evaluated in
    log space so large d cannot overflow. ``lam = 0`` is allowed (drops
    the additive term); runs themselves always use lam > 0.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    L = batch_count_bound(T)
    log_arg = (
        math.log(8.0 * math.pi * d)
        + 2.0 * math.log(L)
        - (d - 1) * math.log(_PACKING_CONST)
        - 2.0 * math.log(delta)
    )
    if not log_arg > 0.0:  # cannot occur for valid inputs; guard anyway
        raise ArithmeticError(f"log argument {log_arg} not positive")
    out = 2.0 * math.sqrt(log_arg) + 2.0 * math.sqrt(lam)
    if not math.isfinite(out):
        raise ArithmeticError("beta1 evaluated to a non-finite value")
    return out


def beta2(n_active: int, T: int, lam: float, delta: float) -> float:
    """Pair-union confidence radius multiplier.

    ``sqrt(2*ln((n**2 - n) * L / delta)) + sqrt(lam)`` over the
    ``n**2 - n`` ordered active pairs and ``L`` batches. A single active
    arm has no pairs: returns +inf so it never binds in the min.
    """
    if n_active < 1:
        raise ValueError(f"n_active must be >= 1, got {n_active}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if n_active == 1:
        return math.inf
    L = batch_count_bound(T)
    pairs = float(n_active) * float(n_active) - float(n_active)
    return math.sqrt(2.0 * (math.log(pairs) + math.log(L) - math.log(delta))) + math.sqrt(lam)


def epsilon_threshold(
    data: BatchData, features: np.ndarray, T: int, delta: float
) -> float:
    """Elimination threshold for one batch.

    ``max_{x,y active} ||x - y||_{H^{-1}} * min(beta1, beta2)``; the two
    radius multipliers come from different union bounds, so the threshold
    takes whichever is smaller for the current active-set size. 0.0 for a
    singleton active set (nothing to compare).
    """
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    n = X.shape[0]
    if n <= 1:
        return 0.0
    width = max_pairwise_norm(data.H, X)
    radius = min(beta1(data.dim, T, data.lam, delta), beta2(n, T, data.lam, delta))
    return width * radius


def allocate(
    weights: np.ndarray, c: float, budget: float, remaining: int
) -> np.ndarray:
    """Integer pull counts for one batch.

    Arm i (position in the active ordering; position 0 is the current
    best guess) is assigned ``ceil(budget * (c * w_i + (1-c) * [i == 0]))``
    pulls, then counts are capped in sequence so the total never exceeds
    ``remaining``. Later arms absorb the truncation.
    """
    w = np.asarray(weights, dtype=np.float64)
    if not 0.0 < c <= 1.0:
        raise ValueError(f"c must lie in (0, 1], got {c}")
    if budget <= 0:
        raise ValueError(f"budget must be > 0, got {budget}")
    if remaining < 0:
        raise ValueError(f"remaining must be >= 0, got {remaining}")
    targets = budget * (c * w)
    targets[0] += budget * (1.0 - c)
    counts = np.zeros(w.size, dtype=np.int64)
    left = int(remaining)
    for i, target in enumerate(targets):
        if left == 0:
            break
        take = min(math.ceil(target), left)
        if take > 0:
            counts[i] = take
            left -= take
    return counts


def eliminate(
    theta_hat: np.ndarray, features: np.ndarray, epsilon: float
) -> list[int]:
    """Surviving positions after thresholding estimated gaps.

    Keeps every arm whose estimated gap to the estimated best arm is
    <= epsilon; the best arm itself (gap 0, lowest position on ties)
    always survives and is moved to position 0, the rest keep their
    relative order.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    scores = X @ np.asarray(theta_hat, dtype=np.float64)
    best = int(np.argmax(scores))
    gaps = scores[best] - scores
    order = [best]
    for i in range(X.shape[0]):
        if i != best and gaps[i] <= epsilon:
            order.append(i)
    return order


# c-rule: fraction of the batch budget spent on the design (the rest
# goes to the incumbent best arm). The default shrinks it with the
# surviving fraction of arms.
CRule = Callable[[int, int, int], float]


def _resolve_c(rule: str | float | CRule, ell: int, n_active: int, n_total: int) -> float:
    if callable(rule):
        c = float(rule(ell, n_active, n_total))
    elif rule == "active-ratio":
        c = n_active / n_total
    elif isinstance(rule, (int, float)):
        c = float(rule)
    else:
        raise ValueError(f"unknown c rule {rule!r}")
    if not 0.0 < c <= 1.0:
        raise ValueError(f"c rule produced {c}, must lie in (0, 1]")
    return c


@dataclass(frozen=True)
class BLAEConfig:
    """Tuning knobs for :func:`run_blae`.

    c_rule: 'active-ratio' (default, c_ell = surviving fraction of
    arms), a constant in (0, 1], or a callable (ell, n_active, n_total)
    -> c. delta None means 1/T.
    """

    lam: float = 1.0
    delta: float | None = None
    c_rule: str | float | CRule = "active-ratio"
    design_tol: float = 1e-3
    design_max_iters: int | None = None

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.design_tol < 0:
            raise ValueError("design_tol must be >= 0")


@dataclass(frozen=True)
class BatchState:
    """Everything one batch computed; handed to the ``on_batch`` callback."""

    ell: int
    active: tuple[int, ...]  # global arm indices surviving the batch, best first
    data: BatchData
    estimate: Estimate
    epsilon: float
    t: int  # rounds consumed through the end of this batch
    c: float
    budget: float
    weights: np.ndarray
    counts: np.ndarray
    active_before: tuple[int, ...]


def run_blae(
    instance: BanditInstance | None,
    T: int,
    config: BLAEConfig | None = None,
    seed: int = 0,
    *,
    checkpoint_stride: int = 1,
    env: Environment | None = None,
    on_batch: Callable[[BatchState], None] | None = None,
) -> RunTrace:
    """Run the batched elimination algorithm for T rounds.

    The trace's batch count never exceeds ``batch_count_bound(T)``, every
    round is consumed exactly once, and the run is deterministic given
    (instance, T, config, seed). Pass ``env`` to reuse a prepared
    environment (the instance argument is then ignored and may be None).
    """
    config = config or BLAEConfig()
    if env is None:
        if instance is None:
            raise ValueError("either an instance or an environment is required")
        env = Environment(instance, T, seed)
    if env.T != T:
        raise ValueError(f"environment horizon {env.T} does not match T={T}")
    delta = config.delta if config.delta is not None else 1.0 / T
    max_batches = batch_count_bound(T)  # validates T >= 4

    t_start = time.perf_counter()
    features = env.features
    n_total = features.shape[0]
    dim = features.shape[1]
    active = list(range(n_total))
    t = 0
    ell = 0
    boundaries: list[int] = []
    survivors: list[tuple[int, ...]] = []
    retained: list[bool] = []

    while t < T:
        ell += 1
        if ell > max_batches:  # schedule guarantees this cannot happen
            raise RuntimeError(f"batch count exceeded the bound {max_batches}")
        n_active = len(active)
        c = _resolve_c(config.c_rule, ell, n_active, n_total)
        budget = batch_budget(T, ell)
        X = features[active]
        problem = DesignProblem(features=X, lam=config.lam, c=c, scale=budget)
        try:
            weights = solve_design(
                problem, tol=config.design_tol, max_iters=config.design_max_iters
            ).weights
        except DesignConvergenceError as err:
            raise DesignConvergenceError(
                err.weights,
                err.max_leverage,
                err.threshold,
                context=f"batch {ell}, {n_active} active arms",
            ) from err
        counts = allocate(weights, c, budget, T - t)

        def batch_pulls():
            for pos, cnt in enumerate(counts):
                if cnt == 0:
                    continue
                x = X[pos]
                for r in env.pull_block(active[pos], int(cnt)):
                    yield x, r

        data = accumulate(batch_pulls(), config.lam, dim)
        t += int(counts.sum())
        theta_hat = solve_rls(data)
        best_local = best_response(theta_hat, X)
        estimate = Estimate(theta_hat=theta_hat, best_arm=best_local)
        epsilon = epsilon_threshold(data, X, T, delta)
        keep = eliminate(theta_hat, X, epsilon)
        new_active = [active[j] for j in keep]

        boundaries.append(t)
        survivors.append(tuple(new_active))
        retained.append(env.best_arm in new_active)
        if on_batch is not None:
            on_batch(
                BatchState(
                    ell=ell,
                    active=tuple(new_active),
                    data=data,
                    estimate=estimate,
                    epsilon=epsilon,
                    t=t,
                    c=c,
                    budget=budget,
                    weights=weights,
                    counts=counts,
                    active_before=tuple(active),
                )
            )
        active = new_active

    if t != T:  # the allocation cap makes this impossible
        raise RuntimeError(f"consumed {t} rounds, expected exactly {T}")
    curve = env.regret_curve()
    rounds = checkpoint_rounds(T, checkpoint_stride)
    return RunTrace(
        rounds=rounds,
        cumulative_regret=curve[rounds - 1],
        batch_boundaries=tuple(boundaries),
        survivors=tuple(survivors),
        optimal_arm_retained=tuple(retained),
        wall_time=time.perf_counter() - t_start,
    )
