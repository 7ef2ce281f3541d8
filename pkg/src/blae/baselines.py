"""Baseline algorithms and the algorithm registry.

Two comparison algorithms share the trace format of the main one: a
rarely-switching optimistic algorithm (policy recomputed only when the
data Gram determinant grows by a fixed factor) and a phased elimination
algorithm on D-optimal designs with the same doubly-exponential phase
schedule. Algorithms are looked up by name through a registry so outside
code can plug in additional ones; every implementation observes rewards
only through the environment's pull channel.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .algorithm import BLAEConfig, allocate, eliminate, run_blae
from .core import BanditInstance, RunTrace, batch_budget, checkpoint_rounds
from .design import DesignProblem, solve_design
from .envsim import Environment
from .estimator import accumulate, best_response, solve_rls

__all__ = [
    "RSOFULConfig",
    "PhaElimDConfig",
    "run_rs_oful",
    "run_phaelim_d",
    "rs_oful_switch_limit",
    "register_algorithm",
    "get_algorithm",
    "algorithm_names",
]


@dataclass(frozen=True)
class RSOFULConfig:
    """Rarely-switching optimistic baseline parameters.

    The policy (estimate, confidence widths, greedy optimistic arm) is
    frozen between switches; a switch fires when det(V_t) exceeds
    (1 + det_trigger) times its value at the last switch. The confidence
    radius is ``sqrt(lam)*theta_bound +
    sigma*sqrt(2*ln(1/delta) + d*ln(1 + T/(d*lam)))`` with delta = 1/T
    when unset.

    The default sigma is deliberately conservative (6x the simulator's
    unit noise scale): with a textbook-tight ellipsoid the optimism
    collapses onto a few arms early, the Gram determinant grows too
    anisotropically to keep triggering switches, and the baseline stops
    matching its reported behavior (100+ parameter updates at the
    benchmark scale). The knob is exposed for experiments that want the
    tight setting.
    """

    lam: float = 1.0
    det_trigger: float = 0.5
    delta: float | None = None
    sigma: float = 6.0
    theta_bound: float = 1.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if self.det_trigger <= 0:
            raise ValueError(f"det_trigger must be > 0, got {self.det_trigger}")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.sigma < 0 or self.theta_bound < 0:
            raise ValueError("sigma and theta_bound must be >= 0")


def rs_oful_switch_limit(d: int, T: int, lam: float, det_trigger: float) -> float:
    """Upper bound on determinant-triggered switches: d*log_{1+C}(1 + T/(d*lam)).

    Each switch multiplies det(V) by more than 1+C and
    det(V_T) <= (lam + T/d)^d, so the count telescopes to this limit.
    """
    return d * math.log(1.0 + T / (d * lam)) / math.log(1.0 + det_trigger)


def run_rs_oful(
    instance: BanditInstance | None,
    T: int,
    config: RSOFULConfig | None = None,
    seed: int = 0,
    *,
    checkpoint_stride: int = 1,
    env: Environment | None = None,
) -> RunTrace:
    """Run the rarely-switching optimistic baseline for T rounds.

    Between switches the optimistic arm is constant, so the run advances
    block by block: with frozen V_tau and chosen arm x, the determinant
    after m more pulls of x is det(V_tau) * (1 + m * x^T V_tau^{-1} x),
    which gives the exact round at which the next switch fires without
    per-round determinant updates.
    """
    config = config or RSOFULConfig()
    if env is None:
        if instance is None:
            raise ValueError("either an instance or an environment is required")
        env = Environment(instance, T, seed)
    if env.T != T:
        raise ValueError(f"environment horizon {env.T} does not match T={T}")
    t_start = time.perf_counter()
    X = env.features
    n, d = X.shape
    delta = config.delta if config.delta is not None else 1.0 / T
    radius = config.theta_bound * math.sqrt(config.lam) + config.sigma * math.sqrt(
        2.0 * math.log(1.0 / delta) + d * math.log(1.0 + T / (d * config.lam))
    )

    if n == 1:
        # one arm: the policy can never change, so nothing ever switches
        env.pull_block(0, T)
        curve = env.regret_curve()
        rounds = checkpoint_rounds(T, checkpoint_stride)
        return RunTrace(
            rounds=rounds,
            cumulative_regret=curve[rounds - 1],
            batch_boundaries=(T,),
            wall_time=time.perf_counter() - t_start,
        )

    V = config.lam * np.eye(d)
    b = np.zeros(d)
    t = 0
    boundaries: list[int] = []
    while t < T:
        # switch: refresh the policy from all data so far
        cho = cho_factor(V, lower=True, check_finite=False)
        theta = cho_solve(cho, b, check_finite=False)
        sol = cho_solve(cho, X.T, check_finite=False)
        lev = np.einsum("ij,ji->i", X, sol)
        scores = X @ theta + radius * np.sqrt(np.clip(lev, 0.0, None))
        arm = int(np.argmax(scores))
        lev_arm = float(lev[arm])
        # det(V + m x x^T) = det(V) (1 + m lev); first m past the trigger
        if lev_arm > 0.0:
            block = math.floor(config.det_trigger / lev_arm) + 1
        else:
            block = T - t
        block = min(block, T - t)
        rewards = env.pull_block(arm, block)
        x = X[arm]
        V += block * np.outer(x, x)
        b += x * float(rewards.sum())
        t += block
        boundaries.append(t)

    curve = env.regret_curve()
    rounds = checkpoint_rounds(T, checkpoint_stride)
    return RunTrace(
        rounds=rounds,
        cumulative_regret=curve[rounds - 1],
        batch_boundaries=tuple(boundaries),
        wall_time=time.perf_counter() - t_start,
    )


@dataclass(frozen=True)
class PhaElimDConfig:
    """Phased D-optimal elimination baseline parameters.

    Phase i spends ``T**(1 - 2**-i)`` rounds on a D-optimal design over
    the surviving arms (tiny ridge for invertibility only), then drops
    every arm whose estimated gap exceeds twice the phase width
    ``sqrt(2 * d * ln(K * i * (i+1) / delta) / m_i)``.
    """

    ridge: float = 1e-6
    delta: float | None = None
    design_tol: float = 1e-3
    design_max_iters: int | None = None

    def __post_init__(self):
        if self.ridge <= 0:
            raise ValueError(f"ridge must be > 0, got {self.ridge}")
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.design_tol < 0:
            raise ValueError("design_tol must be >= 0")


def run_phaelim_d(
    instance: BanditInstance | None,
    T: int,
    config: PhaElimDConfig | None = None,
    seed: int = 0,
    *,
    checkpoint_stride: int = 1,
    env: Environment | None = None,
) -> RunTrace:
    """Run phased D-optimal elimination for T rounds."""
    config = config or PhaElimDConfig()
    if env is None:
        if instance is None:
            raise ValueError("either an instance or an environment is required")
        env = Environment(instance, T, seed)
    if env.T != T:
        raise ValueError(f"environment horizon {env.T} does not match T={T}")
    t_start = time.perf_counter()
    features = env.features
    n_total, dim = features.shape
    delta = config.delta if config.delta is not None else 1.0 / T

    active = list(range(n_total))
    t = 0
    i = 0
    boundaries: list[int] = []
    survivors: list[tuple[int, ...]] = []
    retained: list[bool] = []
    while t < T:
        i += 1
        m = batch_budget(T, i)
        X = features[active]
        problem = DesignProblem(features=X, lam=config.ridge, c=1.0, scale=m)
        weights = solve_design(
            problem, tol=config.design_tol, max_iters=config.design_max_iters
        ).weights
        counts = allocate(weights, 1.0, m, T - t)

        def phase_pulls():
            for pos, cnt in enumerate(counts):
                if cnt == 0:
                    continue
                x = X[pos]
                for r in env.pull_block(active[pos], int(cnt)):
                    yield x, r

        data = accumulate(phase_pulls(), config.ridge, dim)
        t += int(counts.sum())
        theta = solve_rls(data)
        width = math.sqrt(
            2.0 * dim * math.log(n_total * i * (i + 1) / delta) / m
        )
        keep = eliminate(theta, X, 2.0 * width)
        active = [active[j] for j in keep]
        boundaries.append(t)
        survivors.append(tuple(active))
        retained.append(env.best_arm in active)

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


class Runner(Protocol):
    """Uniform algorithm entry point used by the experiment driver."""

    def __call__(
        self,
        instance: BanditInstance | None,
        T: int,
        seed: int = 0,
        *,
        checkpoint_stride: int = 1,
        env: Environment | None = None,
        **params,
    ) -> RunTrace: ...


def _run_blae_named(instance, T, seed=0, *, checkpoint_stride=1, env=None, **params):
    return run_blae(
        instance, T, BLAEConfig(**params), seed,
        checkpoint_stride=checkpoint_stride, env=env,
    )


def _run_rs_oful_named(instance, T, seed=0, *, checkpoint_stride=1, env=None, **params):
    return run_rs_oful(
        instance, T, RSOFULConfig(**params), seed,
        checkpoint_stride=checkpoint_stride, env=env,
    )


def _run_phaelim_d_named(instance, T, seed=0, *, checkpoint_stride=1, env=None, **params):
    return run_phaelim_d(
        instance, T, PhaElimDConfig(**params), seed,
        checkpoint_stride=checkpoint_stride, env=env,
    )


_REGISTRY: dict[str, Runner] = {}


def register_algorithm(name: str, runner: Runner) -> None:
    """Add an algorithm under a CLI-visible name. Re-registering replaces."""
    if not name or any(ch.isspace() for ch in name):
        raise ValueError(f"invalid algorithm name {name!r}")
    _REGISTRY[name] = runner


def get_algorithm(name: str) -> Runner:
    try:
        return _REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise ValueError(f"unknown algorithm {name!r}; known: {known}") from None


def algorithm_names() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


register_algorithm("blae", _run_blae_named)
register_algorithm("rs-oful", _run_rs_oful_named)
register_algorithm("phaelim-d", _run_phaelim_d_named)
