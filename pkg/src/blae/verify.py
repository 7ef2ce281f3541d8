"""Monte Carlo and geometric checks for the library's core guarantees.

Three executable checks, each a pure function of its arguments and seed:

- ``check_concentration``: empirical coverage of the batch estimator's
  confidence bound under Gaussian noise.
- ``check_design_bound``: the worst-case leverage bound after solving a
  design and rounding it to integer pull counts.
- ``build_cover``: constructive sphere cover via greedy maximal packing,
  with Monte Carlo verification of the covering property.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .algorithm import allocate
from .design import DesignConvergenceError, DesignProblem, design_bound, solve_design

__all__ = [
    "ConcentrationReport",
    "DesignBoundRecord",
    "DesignBoundReport",
    "CoverReport",
    "check_concentration",
    "check_design_bound",
    "build_cover",
    "cover_size_bound",
    "circle_cover",
]

logger = logging.getLogger(__name__)

MIN_TRIALS = 1000


@dataclass(frozen=True)
class ConcentrationReport:
    """Outcome of one confidence-bound coverage run."""

    dim: int
    n_pulls: int
    lam: float
    delta: float
    trials: int
    violations: int
    passed: bool

    def __post_init__(self):
        if not 0 <= self.violations <= self.trials:
            raise ValueError(
                f"violations must lie in [0, trials], got {self.violations}"
            )

    @property
    def violation_rate(self) -> float:
        return self.violations / self.trials

    @property
    def rate_ceiling(self) -> float:
        # three-sigma binomial slack on top of the nominal level
        return self.delta + 3.0 * math.sqrt(
            self.delta * (1.0 - self.delta) / self.trials
        )


def _unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def check_concentration(
    dim: int,
    n_pulls: int,
    lam: float,
    delta: float,
    trials: int,
    seed: int = 0,
    noise_sigma: float = 1.0,
) -> ConcentrationReport:
    """Measure how often the estimator's confidence bound fails.

    One pull design (``n_pulls`` random unit vectors) is fixed for the
    whole run. Each trial draws a fresh unit parameter vector and a fresh
    unit test direction, generates Gaussian rewards, solves the
    regularized least-squares system, and tests

        <x, theta_hat - theta> <= (sqrt(2 ln(1/delta)) + sqrt(lam)) ||x||_{H^-1}.

    Parameters
    ----------
    dim : int
        Feature dimension, >= 2.
    n_pulls : int
        Pulls in the fixed design, >= 1.
    lam : float
        Ridge weight, > 0.
    delta : float
        Nominal failure level in (0, 1]. At 1 the log term vanishes and
        only the sqrt(lam) slack remains.
    trials : int
        Monte Carlo repetitions, >= 1000.
    seed : int
        RNG seed; fully determines the report.
    noise_sigma : float
        Reward noise scale. 0 gives a deterministic replay where the
        regularization slack alone must absorb the shrinkage bias.

    Returns
    -------
    ConcentrationReport
        Passing means the violation rate is at most
        ``delta + 3 sqrt(delta (1 - delta) / trials)``.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if n_pulls < 1:
        raise ValueError(f"n_pulls must be >= 1, got {n_pulls}")
    if lam <= 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if trials < MIN_TRIALS:
        raise ValueError(f"trials must be >= {MIN_TRIALS}, got {trials}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")

    rng = np.random.default_rng(seed)
    X = _unit_rows(rng, n_pulls, dim)
    H = lam * np.eye(dim) + X.T @ X
    cf = cho_factor(H, lower=True)

    thetas = _unit_rows(rng, trials, dim)
    dirs = _unit_rows(rng, trials, dim)
    rewards = thetas @ X.T
    if noise_sigma > 0:
        rewards += noise_sigma * rng.standard_normal((trials, n_pulls))

    # theta_hat = H^-1 X^T r, solved for all trials against one factorization
    theta_hats = cho_solve(cf, (rewards @ X).T).T
    solved_dirs = cho_solve(cf, dirs.T).T
    lhs = np.einsum("ij,ij->i", dirs, theta_hats - thetas)
    norms = np.sqrt(np.einsum("ij,ij->i", dirs, solved_dirs))
    radius = math.sqrt(2.0 * math.log(1.0 / delta)) + math.sqrt(lam)

    violations = int(np.count_nonzero(lhs > radius * norms))
    ceiling = delta + 3.0 * math.sqrt(delta * (1.0 - delta) / trials)
    return ConcentrationReport(
        dim=dim,
        n_pulls=n_pulls,
        lam=lam,
        delta=delta,
        trials=trials,
        violations=violations,
        passed=violations / trials <= ceiling,
    )


@dataclass(frozen=True)
class DesignBoundRecord:
    """Leverage check for a single arm set."""

    n_arms: int
    dim: int
    max_leverage: float
    threshold: float
    passed: bool
    note: str = ""


@dataclass(frozen=True)
class DesignBoundReport:
    """Leverage checks across a collection of arm sets."""

    lam: float
    c: float
    scale: float
    tol: float
    records: tuple[DesignBoundRecord, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)


def check_design_bound(
    feature_sets,
    lam: float = 1.0,
    c: float = 1.0,
    scale: float = 1e4,
    tol: float = 1e-3,
) -> DesignBoundReport:
    """Check the post-rounding leverage bound on each given arm set.

    For each feature matrix: solve the design, round the weights to
    integer pull counts the way a batch would, assemble
    ``H = lam I + sum_i count_i x_i x_i^T``, and require

        max_i x_i^T H^-1 x_i <= (1 + tol) * d / (d lam + scale c).

    Rounding only adds pulls, so a certified design can only tighten; a
    failure here indicates a solver or assembly bug, not bad luck. A
    design that fails to certify is recorded as a failing record with an
    explanatory note rather than raised.

    Parameters
    ----------
    feature_sets : iterable of ndarray
        Arm feature matrices, one per instance, each (n_arms, dim) with
        row norms <= 1.
    lam, c, scale, tol : float
        Ridge weight, exploration fraction, pull budget, and relative
        slack, shared across instances.

    Returns
    -------
    DesignBoundReport
        ``passed`` is the conjunction over instances.
    """
    records = []
    for X in feature_sets:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        problem = DesignProblem(X, lam=lam, c=c, scale=scale)
        d = problem.dim
        threshold = (1.0 + tol) * design_bound(d, lam, c, scale) / c
        try:
            weights = solve_design(problem, tol=tol)
        except DesignConvergenceError as err:
            records.append(
                DesignBoundRecord(
                    n_arms=problem.n_arms,
                    dim=d,
                    max_leverage=err.max_leverage,
                    threshold=threshold,
                    passed=False,
                    note="design solver did not certify",
                )
            )
            continue
        # remaining large enough that no count is truncated
        counts = allocate(
            weights.weights, c, scale, int(math.ceil(scale)) + problem.n_arms + 2
        )
        H = lam * np.eye(d) + X.T @ (counts[:, None] * X)
        cf = cho_factor(H, lower=True)
        lev = float(np.einsum("ij,ij->i", X, cho_solve(cf, X.T).T).max())
        records.append(
            DesignBoundRecord(
                n_arms=problem.n_arms,
                dim=d,
                max_leverage=lev,
                threshold=threshold,
                passed=lev <= threshold,
            )
        )
    return DesignBoundReport(
        lam=lam, c=c, scale=scale, tol=tol, records=tuple(records)
    )


@dataclass(frozen=True)
class CoverReport:
    """A constructed sphere cover and its verification outcome."""

    zeta: float
    dim: int
    centers: np.ndarray
    cardinality: int
    bound: float
    mc_coverage_ok: bool
    status: str

    def __post_init__(self):
        C = np.asarray(self.centers, dtype=np.float64)
        if C.ndim != 2 or C.shape[0] != self.cardinality or C.shape[1] != self.dim:
            raise ValueError(
                f"centers must be ({self.cardinality}, {self.dim}), got {C.shape}"
            )
        norms = np.linalg.norm(C, axis=1)
        if np.abs(norms - 1.0).max() > 1e-12:
            raise ValueError("every center must have unit norm within 1e-12")
        if self.status not in ("ok", "inconclusive"):
            raise ValueError(f"status must be 'ok' or 'inconclusive', got {self.status!r}")
        C = np.ascontiguousarray(C)
        C.flags.writeable = False
        object.__setattr__(self, "centers", C)


def cover_size_bound(dim: int, zeta: float) -> float:
    """Cardinality bound ``sqrt(2 pi d) (zeta^2 - zeta^4/4)^{-(d-1)/2}``."""
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if not 0.0 < zeta < 1.0:
        raise ValueError(f"zeta must lie in (0, 1), got {zeta}")
    return math.sqrt(2.0 * math.pi * dim) * (zeta**2 - zeta**4 / 4.0) ** (
        -(dim - 1) / 2.0
    )


def circle_cover(zeta: float) -> np.ndarray:
    """Smallest equiangular cover of the unit circle at radius ``zeta``.

    A center covers the arc within angular distance ``2 arcsin(zeta/2)``
    of it, so ``ceil(pi / (2 arcsin(zeta/2)))`` equally spaced centers
    suffice. Returned as unit rows.
    """
    if not 0.0 < zeta < 1.0:
        raise ValueError(f"zeta must lie in (0, 1), got {zeta}")
    half_arc = 2.0 * math.asin(zeta / 2.0)
    n = math.ceil(math.pi / half_arc)
    angles = 2.0 * math.pi * np.arange(n) / n
    return np.column_stack([np.cos(angles), np.sin(angles)])


def build_cover(
    dim: int,
    zeta: float,
    seed: int = 0,
    rejection_streak: int = 500_000,
    max_candidates: int = 50_000_000,
    mc_samples: int = 100_000,
) -> CoverReport:
    """Grow a maximal packing of the unit sphere and verify it covers.

    Candidates are sampled uniformly on the sphere and accepted whenever
    they lie at distance > ``zeta`` from every accepted center. Once a
    packing is maximal, every point of the sphere is within ``zeta`` of
    some center, so the packing doubles as a cover. Construction stops
    after ``rejection_streak`` consecutive rejections; if
    ``max_candidates`` is exhausted before such a streak occurs, the
    report's status is ``"inconclusive"``.

    Coverage is then tested with ``mc_samples`` fresh uniform points,
    all of which must land within ``zeta`` of a center. The cardinality
    is reported against :func:`cover_size_bound` as a diagnostic only; a
    greedy maximal packing is not a minimal cover, so exceeding the
    bound is logged, not failed.

    Parameters
    ----------
    dim : int
        Sphere dimension (ambient), >= 2.
    zeta : float
        Covering radius in (0, 1).
    seed : int
        RNG seed; fully determines the centers and the check.
    rejection_streak : int
        Consecutive rejections required to declare the packing maximal.
    max_candidates : int
        Cap on total candidates before giving up with inconclusive status.
    mc_samples : int
        Points used in the coverage check.

    Returns
    -------
    CoverReport
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if not 0.0 < zeta < 1.0:
        raise ValueError(f"zeta must lie in (0, 1), got {zeta}")
    if rejection_streak < 1:
        raise ValueError(f"rejection_streak must be >= 1, got {rejection_streak}")
    if max_candidates < 1:
        raise ValueError(f"max_candidates must be >= 1, got {max_candidates}")
    if mc_samples < 1:
        raise ValueError(f"mc_samples must be >= 1, got {mc_samples}")

    rng = np.random.default_rng(seed)
    zeta_sq = zeta * zeta
    centers: list[np.ndarray] = []
    streak = 0
    total = 0
    status = "inconclusive"
    chunk = 8192
    while total < max_candidates:
        m = min(chunk, max_candidates - total)
        cand = _unit_rows(rng, m, dim)
        if centers:
            gram = cand @ np.asarray(centers).T
            # squared distance between unit vectors is 2 - 2 <u, v>
            accept = 2.0 - 2.0 * gram.max(axis=1) > zeta_sq
        else:
            accept = np.ones(m, dtype=bool)
        hits = np.flatnonzero(accept)
        if hits.size == 0:
            streak += m
            total += m
            if streak >= rejection_streak:
                status = "ok"
                break
        else:
            # keep only the first acceptable candidate; the rest of the
            # chunk is discarded so the accepted stream stays i.i.d.
            i = int(hits[0])
            if streak + i >= rejection_streak:
                total += i
                status = "ok"
                break
            centers.append(cand[i])
            streak = 0
            total += i + 1

    C = np.asarray(centers, dtype=np.float64)
    C /= np.linalg.norm(C, axis=1, keepdims=True)

    covered = True
    remaining = mc_samples
    while remaining > 0:
        m = min(20_000, remaining)
        pts = _unit_rows(rng, m, dim)
        dist_sq = 2.0 - 2.0 * (pts @ C.T).max(axis=1)
        if bool((dist_sq > zeta_sq + 1e-12).any()):
            covered = False
            break
        remaining -= m

    bound = cover_size_bound(dim, zeta)
    if C.shape[0] > bound:
        logger.info(
            "greedy packing of size %d exceeds the cover-size bound %.4g "
            "(expected: maximal packings are not minimal covers)",
            C.shape[0],
            bound,
        )
    return CoverReport(
        zeta=zeta,
        dim=dim,
        centers=C,
        cardinality=C.shape[0],
        bound=bound,
        mc_coverage_ok=covered,
        status=status,
    )
