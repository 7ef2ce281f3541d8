"""Seeded linear bandit simulator.

Instances are sampled from simple coordinate distributions and clipped to
the unit ball; rewards are ``<x, theta_star>`` plus Gaussian noise. The
:class:`Environment` pre-draws one noise value per round, so two
algorithms run against the same (instance, seed) see identical noise at
round t no matter which arms they pull — paired comparisons differ only
through decisions.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .core import ArmSet, BanditInstance

__all__ = [
    "InstanceSpec",
    "PullResult",
    "Environment",
    "sample_instance",
    "pull",
    "save_instance",
    "load_instance",
]

DISTRIBUTIONS = ("uniform", "normal")


@dataclass(frozen=True)
class InstanceSpec:
    """Recipe for sampling a problem instance.

    distribution 'uniform' draws i.i.d. U[-1, 1] coordinates, 'normal'
    draws i.i.d. standard normal coordinates; in both cases any vector
    with norm > 1 (including theta_star) is rescaled to unit norm.
    """

    n_arms: int
    dim: int
    distribution: str = "uniform"
    seed: int = 0
    noise_sigma: float = 1.0

    def __post_init__(self):
        if self.n_arms < 1:
            raise ValueError(f"n_arms must be >= 1, got {self.n_arms}")
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(
                f"unknown distribution {self.distribution!r}, expected one of {DISTRIBUTIONS}"
            )
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class PullResult:
    """One observed reward plus the accounting-only instantaneous gap."""

    reward: float
    instantaneous_gap: float


def _clip_to_ball(v: np.ndarray) -> np.ndarray:
    """Rescale rows with Euclidean norm > 1 to unit norm (in place)."""
    v = np.atleast_2d(v)
    norms = np.linalg.norm(v, axis=1)
    over = norms > 1.0
    if np.any(over):
        v[over] /= norms[over, None]
    return v


def sample_instance(spec: InstanceSpec) -> BanditInstance:
    """Draw an instance from ``spec``; arms first, then theta_star."""
    rng = np.random.default_rng(spec.seed)
    shape = (spec.n_arms, spec.dim)
    if spec.distribution == "uniform":
        feats = rng.uniform(-1.0, 1.0, shape)
        theta = rng.uniform(-1.0, 1.0, spec.dim)
    else:
        feats = rng.standard_normal(shape)
        theta = rng.standard_normal(spec.dim)
    feats = _clip_to_ball(feats)
    theta = _clip_to_ball(theta)[0]
    return BanditInstance(
        arms=ArmSet(features=feats), theta_star=theta, noise_sigma=spec.noise_sigma
    )


def pull(instance: BanditInstance, arm_index: int, rng: np.random.Generator) -> PullResult:
    """One pull: reward ``<x, theta*> + sigma * N(0,1)``; advances ``rng``."""
    if not 0 <= arm_index < instance.arms.n_arms:
        raise ValueError(f"arm index {arm_index} out of range")
    mean = float(instance.mean_rewards[arm_index])
    noise = instance.noise_sigma * float(rng.standard_normal()) if instance.noise_sigma else 0.0
    return PullResult(
        reward=mean + noise, instantaneous_gap=float(instance.gaps[arm_index])
    )


class Environment:
    """A budgeted reward channel with round-indexed noise.

    The noise sequence noise[0..T-1] is drawn up front from
    ``default_rng(seed)``; the pull in round t observes
    ``mean(arm) + sigma * noise[t]`` regardless of which arm it is. The
    environment also keeps the per-round gap sequence so runners can read
    off cumulative pseudo-regret without touching theta_star.
    """

    def __init__(self, instance: BanditInstance, T: int, seed: int = 0):
        if T < 1:
            raise ValueError(f"T must be >= 1, got {T}")
        self._instance = instance
        self.T = int(T)
        self.features = instance.arms.features
        self._means = instance.mean_rewards
        self._gaps = instance.gaps
        self._best_arm = instance.best_arm
        sigma = instance.noise_sigma
        if sigma > 0:
            self._noise = sigma * np.random.default_rng(seed).standard_normal(self.T)
        else:
            self._noise = np.zeros(self.T)
        self._gap_seq = np.zeros(self.T)
        self.t = 0

    @property
    def n_arms(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def remaining(self) -> int:
        return self.T - self.t

    @property
    def best_arm(self) -> int:
        """True optimal arm index; accounting only, not an observation."""
        return self._best_arm

    def gap_of(self, arm_index: int) -> float:
        """Instantaneous gap of an arm; accounting only."""
        return float(self._gaps[arm_index])

    def pull(self, arm_index: int) -> PullResult:
        reward = self.pull_block(arm_index, 1)[0]
        return PullResult(reward=float(reward), instantaneous_gap=float(self._gaps[arm_index]))

    def pull_block(self, arm_index: int, count: int) -> np.ndarray:
        """Pull one arm ``count`` times in consecutive rounds; returns rewards."""
        if not 0 <= arm_index < self.n_arms:
            raise ValueError(f"arm index {arm_index} out of range")
        if count < 0:
            raise ValueError("count must be >= 0")
        if self.t + count > self.T:
            raise ValueError(
                f"budget exhausted: {count} pulls requested with {self.remaining} rounds left"
            )
        lo, hi = self.t, self.t + count
        rewards = self._means[arm_index] + self._noise[lo:hi]
        self._gap_seq[lo:hi] = self._gaps[arm_index]
        self.t = hi
        return rewards

    def regret_curve(self) -> np.ndarray:
        """Cumulative pseudo-regret over the rounds consumed so far."""
        return np.cumsum(self._gap_seq[: self.t])


def save_instance(instance: BanditInstance, path) -> None:
    """Write an instance as text: one arm per line, theta on a tagged line."""
    with open(path, "w", encoding="ascii") as fh:
        _write_instance(instance, fh)


def _write_instance(instance: BanditInstance, fh: io.TextIOBase) -> None:
    k, d = instance.arms.features.shape
    fh.write(f"# linear bandit instance: {k} arms, dim {d}\n")
    fh.write(f"sigma {instance.noise_sigma!r}\n")
    for row in instance.arms.features:
        fh.write(" ".join(repr(v) for v in row.tolist()) + "\n")
    fh.write("theta " + " ".join(repr(v) for v in instance.theta_star.tolist()) + "\n")


def load_instance(path) -> BanditInstance:
    """Read an instance written by :func:`save_instance`. Exact round trip."""
    arms: list[list[float]] = []
    theta = None
    sigma = 1.0
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("theta "):
                if theta is not None:
                    raise ValueError(f"line {lineno}: duplicate theta line")
                theta = [float(v) for v in line.split()[1:]]
            elif line.startswith("sigma "):
                sigma = float(line.split()[1])
            else:
                arms.append([float(v) for v in line.split()])
    if theta is None:
        raise ValueError("instance file has no theta line")
    if not arms:
        raise ValueError("instance file has no arm lines")
    return BanditInstance(
        arms=ArmSet(features=np.array(arms)), theta_star=np.array(theta), noise_sigma=sigma
    )
