"""Core types and the doubly-exponential batch schedule.

Shared value types (arm sets, problem instances, run traces) and the
schedule arithmetic used by the batched algorithms: batch ``ell`` gets a
real-valued budget of ``T**((2**ell - 1) / 2**ell)`` rounds, which caps the
total number of batches at ``1 + ceil(log2(log2(T)))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-9

# Minimum admissible horizon: log2(log2(T)) needs T >= 4 to be defined
# and nonneg.
MIN_HORIZON = 4


def _as_readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ArmSet:
    """Immutable set of feature vectors, one arm per row.

    Parameters
    ----------
    features : (K, d) array_like
        Arm feature vectors. Every row must have Euclidean norm at most
        1 (tolerance 1e-9), K >= 1 and d >= 2.
    """

    features: np.ndarray

    def __post_init__(self):
        feats = _as_readonly(self.features)
        if feats.ndim != 2:
            raise ValueError(f"features must be a 2-d array, got ndim={feats.ndim}")
        k, d = feats.shape
        if k < 1:
            raise ValueError("arm set must contain at least one arm")
        if d < 2:
            raise ValueError(f"feature dimension must be >= 2, got {d}")
        if not np.all(np.isfinite(feats)):
            raise ValueError("arm features must be finite")
        norms = np.linalg.norm(feats, axis=1)
        worst = float(norms.max())
        if worst > 1.0 + NORM_TOL:
            raise ValueError(f"arm norms must be <= 1, max norm is {worst:.6g}")
        object.__setattr__(self, "features", feats)

    @property
    def n_arms(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class BanditInstance:
    """A linear bandit problem: arms plus a hidden parameter vector.

    Rewards are ``<x, theta_star> + noise`` with standard normal noise
    scaled by ``noise_sigma``.
    """

    arms: ArmSet
    theta_star: np.ndarray
    noise_sigma: float = 1.0

    def __post_init__(self):
        theta = _as_readonly(self.theta_star)
        if theta.ndim != 1 or theta.shape[0] != self.arms.dim:
            raise ValueError(
                f"theta_star must be a length-{self.arms.dim} vector, "
                f"got shape {theta.shape}"
            )
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta_star must be finite")
        nrm = float(np.linalg.norm(theta))
        if nrm > 1.0 + NORM_TOL:
            raise ValueError(f"theta_star norm must be <= 1, got {nrm:.6g}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        object.__setattr__(self, "theta_star", theta)

    @property
    def mean_rewards(self) -> np.ndarray:
        return self.arms.features @ self.theta_star

    @property
    def best_arm(self) -> int:
        # lowest index wins ties, matching np.argmax
        return int(np.argmax(self.mean_rewards))

    @property
    def gaps(self) -> np.ndarray:
        means = self.mean_rewards
        return means.max() - means


# Half-angle parameter of the sphere cover underlying the elimination
# threshold. Fixed: the threshold constants are derived at this value.
COVERING_ZETA = 0.5


@dataclass(frozen=True)
class ScheduleParams:
    """Horizon and regularization parameters shared across a run."""

    T: int
    lam: float = 1.0
    delta: float | None = None  # None means 1/T
    zeta: float = COVERING_ZETA

    def __post_init__(self):
        if self.T < MIN_HORIZON:
            raise ValueError(f"horizon T must be >= {MIN_HORIZON}, got {self.T}")
        if self.lam <= 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        delta = self.delta if self.delta is not None else 1.0 / self.T
        if not 0 < delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        if self.zeta != COVERING_ZETA:
            raise ValueError(f"zeta is fixed at {COVERING_ZETA}")

    @property
    def effective_delta(self) -> float:
        return self.delta if self.delta is not None else 1.0 / self.T


def batch_budget(T: int, ell: int) -> float:
    """Real-valued round budget for batch ``ell`` (1-based): T^((2^ell - 1)/2^ell).

    Monotone in ``ell`` and approaches T from below; rounding to integer
    pull counts happens at allocation time, not here.
    """
    if T < MIN_HORIZON:
        raise ValueError(f"horizon T must be >= {MIN_HORIZON}, got {T}")
    if ell < 1:
        raise ValueError(f"batch index ell must be >= 1, got {ell}")
    return float(T) ** ((2.0**ell - 1.0) / 2.0**ell)


def batch_count_bound(T: int) -> int:
    """Largest number of batches the schedule can produce: 1 + ceil(log2 log2 T)."""
    if T < MIN_HORIZON:
        raise ValueError(f"horizon T must be >= {MIN_HORIZON}, got {T}")
    return 1 + math.ceil(math.log2(math.log2(T)))


@dataclass(frozen=True)
class RunTrace:
    """Record of one algorithm run on one instance.

    Fields
    ------
    rounds : (m,) int array
        Checkpoint rounds, 1-based, strictly increasing, last entry T.
    cumulative_regret : (m,) float array
        Cumulative pseudo-regret at each checkpoint round.
    batch_boundaries : tuple of int
        Round at which each batch (or policy period) ended; strictly
        increasing, final entry T.
    survivors : tuple of tuple of int
        Global arm indices active after each batch, best-first where the
        algorithm defines an ordering. Empty for non-eliminating
        algorithms.
    optimal_arm_retained : tuple of bool
        Per batch, whether the true best arm survived elimination.
    wall_time : float
        Wall-clock seconds for the run. Not deterministic.
    """

    rounds: np.ndarray
    cumulative_regret: np.ndarray
    batch_boundaries: tuple[int, ...]
    survivors: tuple[tuple[int, ...], ...] = ()
    optimal_arm_retained: tuple[bool, ...] = ()
    wall_time: float = 0.0

    def __post_init__(self):
        rounds = _as_readonly(self.rounds).astype(np.int64)
        rounds.flags.writeable = False
        regret = _as_readonly(self.cumulative_regret)
        if rounds.shape != regret.shape or rounds.ndim != 1:
            raise ValueError("rounds and cumulative_regret must be aligned 1-d arrays")
        if rounds.size == 0:
            raise ValueError("trace must contain at least one checkpoint")
        if np.any(np.diff(rounds) <= 0):
            raise ValueError("checkpoint rounds must be strictly increasing")
        # pseudo-regret uses gaps >= 0, so the running sum never decreases
        if np.any(np.diff(regret) < -1e-9):
            raise ValueError("cumulative regret must be non-decreasing")
        bounds = tuple(int(b) for b in self.batch_boundaries)
        if len(bounds) == 0:
            raise ValueError("trace must contain at least one batch boundary")
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise ValueError("batch boundaries must be strictly increasing")
        if bounds[-1] != int(rounds[-1]):
            raise ValueError("final batch boundary must equal the final round")
        object.__setattr__(self, "rounds", rounds)
        object.__setattr__(self, "cumulative_regret", regret)
        object.__setattr__(self, "batch_boundaries", bounds)
        object.__setattr__(
            self, "survivors", tuple(tuple(int(i) for i in s) for s in self.survivors)
        )
        object.__setattr__(
            self, "optimal_arm_retained", tuple(bool(b) for b in self.optimal_arm_retained)
        )

    @property
    def horizon(self) -> int:
        return int(self.rounds[-1])

    @property
    def n_batches(self) -> int:
        return len(self.batch_boundaries)

    @property
    def final_regret(self) -> float:
        return float(self.cumulative_regret[-1])


def checkpoint_rounds(T: int, stride: int) -> np.ndarray:
    """Rounds at which regret is recorded: stride, 2*stride, ..., plus T."""
    if stride < 1:
        raise ValueError(f"checkpoint stride must be >= 1, got {stride}")
    pts = np.arange(stride, T + 1, stride, dtype=np.int64)
    if pts.size == 0 or pts[-1] != T:
        pts = np.append(pts, T)
    return pts
