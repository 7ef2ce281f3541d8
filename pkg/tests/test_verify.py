"""Verification harness: coverage rates, rounding-safe leverage, covers."""

import math

import numpy as np
import pytest

import blae.verify as verify
from blae.design import DesignConvergenceError
from blae.verify import (
    ConcentrationReport,
    CoverReport,
    build_cover,
    check_concentration,
    check_design_bound,
    circle_cover,
    cover_size_bound,
)


class TestConcentration:
    def test_rate_ceiling_frozen_value(self):
        report = check_concentration(dim=2, n_pulls=50, lam=1.0, delta=0.05, trials=10_000)
        oracle = 0.05 + 3.0 * math.sqrt(0.05 * 0.95 / 10_000)
        np.testing.assert_allclose(report.rate_ceiling, oracle, rtol=1e-14)
        np.testing.assert_allclose(report.rate_ceiling, 0.05653834841531101, rtol=1e-12)

    def test_standard_cells_pass(self):
        for dim, delta, lam in ((2, 0.05, 1.0), (5, 0.1, 0.1), (10, 0.01, 1.0)):
            report = check_concentration(
                dim=dim, n_pulls=100, lam=lam, delta=delta, trials=5_000
            )
            assert report.passed, (dim, delta, lam, report.violation_rate)
            assert report.violation_rate <= report.rate_ceiling

    def test_zero_noise_never_violates(self):
        # without noise the error is pure shrinkage bias, which the
        # sqrt(lam) slack covers with strict inequality
        for dim in (2, 5):
            report = check_concentration(
                dim=dim, n_pulls=30, lam=0.5, delta=0.01, trials=2_000, noise_sigma=0.0
            )
            assert report.violations == 0
            assert report.passed

    def test_delta_one_edge(self):
        report = check_concentration(dim=3, n_pulls=20, lam=1.0, delta=1.0, trials=1_000)
        assert report.rate_ceiling == 1.0
        assert report.passed

    def test_deterministic_in_seed(self):
        a = check_concentration(dim=4, n_pulls=40, lam=1.0, delta=0.05, trials=2_000, seed=3)
        b = check_concentration(dim=4, n_pulls=40, lam=1.0, delta=0.05, trials=2_000, seed=3)
        assert a == b

    def test_validation(self):
        good = dict(dim=2, n_pulls=10, lam=1.0, delta=0.1, trials=1000)
        with pytest.raises(ValueError):
            check_concentration(**{**good, "dim": 1})
        with pytest.raises(ValueError):
            check_concentration(**{**good, "n_pulls": 0})
        with pytest.raises(ValueError):
            check_concentration(**{**good, "lam": 0.0})
        with pytest.raises(ValueError):
            check_concentration(**{**good, "delta": 0.0})
        with pytest.raises(ValueError):
            check_concentration(**{**good, "trials": 999})
        with pytest.raises(ValueError):
            check_concentration(**{**good, "noise_sigma": -1.0})

    def test_report_rejects_impossible_counts(self):
        with pytest.raises(ValueError):
            ConcentrationReport(
                dim=2, n_pulls=1, lam=1.0, delta=0.1, trials=10, violations=11, passed=False
            )


class TestDesignBound:
    def test_basis_arms_sit_at_the_bound(self):
        report = check_design_bound([np.eye(3)], lam=1.0, c=1.0, scale=1e4, tol=1e-3)
        assert report.passed
        rec = report.records[0]
        # ceil rounding only adds pulls, so the measured leverage lands
        # just under the unrounded bound
        bound = 3.0 / (3.0 + 1e4)
        assert rec.max_leverage <= bound
        np.testing.assert_allclose(rec.max_leverage, bound, rtol=2e-3)
        assert rec.threshold == (1 + 1e-3) * bound

    def test_random_instances_pass(self):
        rng = np.random.default_rng(0)
        sets = []
        for n, d in ((10, 2), (25, 3), (40, 5)):
            X = rng.standard_normal((n, d))
            X /= np.maximum(np.linalg.norm(X, axis=1, keepdims=True), 1.0)
            sets.append(X)
        for c in (0.5, 1.0):
            report = check_design_bound(sets, lam=1.0, c=c, scale=1e4, tol=1e-3)
            assert report.passed
            assert len(report.records) == 3
            for rec in report.records:
                assert rec.max_leverage <= rec.threshold

    def test_uncertified_design_becomes_failing_record(self, monkeypatch):
        def refuse(problem, tol=1e-3, max_iters=None):
            raise DesignConvergenceError(
                np.full(problem.n_arms, 1.0 / problem.n_arms), 1.0, 0.5
            )

        monkeypatch.setattr(verify, "solve_design", refuse)
        report = check_design_bound([np.eye(2)], lam=1.0, c=1.0, scale=100.0)
        assert not report.passed
        assert report.records[0].note == "design solver did not certify"
        assert report.records[0].max_leverage == 1.0

    def test_empty_input_passes_vacuously(self):
        report = check_design_bound([])
        assert report.passed
        assert report.records == ()


class TestCoverBound:
    def test_frozen_value(self):
        oracle = math.sqrt(2 * math.pi * 2) * (0.25 - 0.25**2 / 4.0) ** -0.5
        np.testing.assert_allclose(cover_size_bound(2, 0.5), oracle, rtol=1e-14)
        np.testing.assert_allclose(cover_size_bound(2, 0.5), 7.322329862910152, rtol=1e-12)

    def test_tightens_with_radius(self):
        assert cover_size_bound(3, 0.3) > cover_size_bound(3, 0.5) > cover_size_bound(3, 0.9)

    def test_validation(self):
        with pytest.raises(ValueError):
            cover_size_bound(1, 0.5)
        with pytest.raises(ValueError):
            cover_size_bound(2, 1.0)


class TestCircleCover:
    def test_seven_centers_at_default_radius(self):
        centers = circle_cover(0.5)
        assert centers.shape == (7, 2)
        np.testing.assert_allclose(np.linalg.norm(centers, axis=1), 1.0, rtol=1e-14)
        # worst case sits halfway between adjacent centers
        worst = 2.0 * math.sin(math.pi / 14.0)
        angles = np.linspace(0.0, 2.0 * math.pi, 20_001)
        points = np.column_stack([np.cos(angles), np.sin(angles)])
        dists = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
        max_min = dists.min(axis=1).max()
        np.testing.assert_allclose(max_min, worst, atol=1e-6)
        assert max_min <= 0.5

    def test_count_matches_arc_formula(self):
        for zeta in (0.2, 0.5, 0.8):
            n = math.ceil(math.pi / (2.0 * math.asin(zeta / 2.0)))
            assert circle_cover(zeta).shape[0] == n


class TestBuildCover:
    def test_plane_cover_with_defaults(self):
        report = build_cover(2, 0.5, seed=0)
        assert report.status == "ok"
        assert report.mc_coverage_ok
        assert report.cardinality == 10
        np.testing.assert_allclose(np.linalg.norm(report.centers, axis=1), 1.0, atol=1e-12)
        # a maximal packing keeps its centers more than zeta apart
        gram = report.centers @ report.centers.T
        np.fill_diagonal(gram, -1.0)
        min_dist = math.sqrt(2.0 - 2.0 * gram.max())
        assert min_dist > 0.5

    def test_three_dim_cover_properties(self):
        report = build_cover(3, 0.5, seed=1)
        assert report.status == "ok"
        assert report.mc_coverage_ok
        assert report.cardinality >= 4
        gram = report.centers @ report.centers.T
        np.fill_diagonal(gram, -1.0)
        assert math.sqrt(2.0 - 2.0 * gram.max()) > 0.5

    def test_short_streak_false_positive_is_caught(self):
        # an undersized rejection streak can declare maximality too early;
        # the Monte Carlo stage must then report the coverage gap
        report = build_cover(3, 0.5, seed=1, rejection_streak=50_000, mc_samples=50_000)
        assert report.status == "ok"
        assert not report.mc_coverage_ok

    def test_candidate_cap_yields_inconclusive(self):
        report = build_cover(3, 0.5, seed=0, rejection_streak=10_000, max_candidates=50)
        assert report.status == "inconclusive"

    def test_deterministic_in_seed(self):
        a = build_cover(2, 0.6, seed=4, rejection_streak=20_000)
        b = build_cover(2, 0.6, seed=4, rejection_streak=20_000)
        assert a.centers.tobytes() == b.centers.tobytes()
        assert a.cardinality == b.cardinality

    def test_wide_radius_edge(self):
        report = build_cover(2, 0.99, seed=0, rejection_streak=20_000)
        assert report.status == "ok"
        assert report.mc_coverage_ok
        assert report.cardinality >= 2

    def test_validation(self):
        with pytest.raises(ValueError):
            build_cover(1, 0.5)
        with pytest.raises(ValueError):
            build_cover(2, 0.0)
        with pytest.raises(ValueError):
            build_cover(2, 0.5, rejection_streak=0)
        with pytest.raises(ValueError):
            build_cover(2, 0.5, max_candidates=0)
        with pytest.raises(ValueError):
            build_cover(2, 0.5, mc_samples=0)

    def test_report_rejects_off_sphere_centers(self):
        with pytest.raises(ValueError):
            CoverReport(
                zeta=0.5,
                dim=2,
                centers=np.array([[2.0, 0.0]]),
                cardinality=1,
                bound=7.3,
                mc_coverage_ok=True,
                status="ok",
            )
        with pytest.raises(ValueError):
            CoverReport(
                zeta=0.5,
                dim=2,
                centers=np.array([[1.0, 0.0]]),
                cardinality=1,
                bound=7.3,
                mc_coverage_ok=True,
                status="maybe",
            )
