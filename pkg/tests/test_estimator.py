"""Batched least squares against explicit-inverse and double-loop oracles."""

import numpy as np
import pytest

from blae.estimator import (
    BatchData,
    accumulate,
    best_response,
    estimate_batch,
    mahalanobis_inv,
    max_pairwise_norm,
    solve_rls,
)


def naive_accumulate(pulls, lam, dim):
    # independent reference: plain double loop, no shortcuts
    H = lam * np.eye(dim)
    b = np.zeros(dim)
    for x, r in pulls:
        for i in range(dim):
            for j in range(dim):
                H[i, j] += x[i] * x[j]
            b[i] += r * x[i]
    return H, b


class TestAccumulate:
    def test_empty_batch(self):
        data = accumulate([], lam=1.0, dim=3)
        np.testing.assert_array_equal(data.H, np.eye(3))
        np.testing.assert_array_equal(data.b, np.zeros(3))
        assert data.n_pulls == 0

    def test_repeated_basis_pulls(self):
        e1 = np.array([1.0, 0.0])
        data = accumulate([(e1, 1.0)] * 4, lam=1.0, dim=2)
        np.testing.assert_array_equal(data.H, np.diag([5.0, 1.0]))
        np.testing.assert_array_equal(data.b, [4.0, 0.0])
        assert data.n_pulls == 4

    def test_matches_double_loop_exactly(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((40, 3)) * 0.4
        rewards = rng.standard_normal(40)
        pulls = [(X[i], float(rewards[i])) for i in range(40)]
        data = accumulate(pulls, lam=0.5, dim=3)
        H_ref, b_ref = naive_accumulate(pulls, 0.5, 3)
        np.testing.assert_allclose(data.H, H_ref, rtol=1e-14, atol=0)
        np.testing.assert_allclose(data.b, b_ref, rtol=1e-14, atol=0)

    def test_bit_identical_reruns(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((25, 4)) * 0.3
        pulls = [(X[i], float(i) * 0.1) for i in range(25)]
        a = accumulate(pulls, lam=1.0, dim=4)
        b = accumulate(pulls, lam=1.0, dim=4)
        assert a.H.tobytes() == b.H.tobytes()
        assert a.b.tobytes() == b.b.tobytes()

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            accumulate([], lam=0.0, dim=2)
        with pytest.raises(ValueError):
            accumulate([], lam=1.0, dim=0)
        with pytest.raises(ValueError):
            accumulate([(np.ones(3), 1.0)], lam=1.0, dim=2)
        with pytest.raises(ArithmeticError), np.errstate(invalid="ignore"):
            accumulate([(np.array([np.inf, 0.0]), 1.0)], lam=1.0, dim=2)


class TestSolveRLS:
    def test_frozen_basis_case(self):
        e1 = np.array([1.0, 0.0])
        data = accumulate([(e1, 1.0)] * 4, lam=1.0, dim=2)
        np.testing.assert_allclose(solve_rls(data), [0.8, 0.0], rtol=1e-15)

    def test_matches_explicit_inverse(self):
        rng = np.random.default_rng(12)
        for _ in range(5):
            X = rng.standard_normal((30, 5)) * 0.4
            r = rng.standard_normal(30)
            data = accumulate([(X[i], float(r[i])) for i in range(30)], lam=2.0, dim=5)
            oracle = np.linalg.inv(data.H) @ data.b
            np.testing.assert_allclose(solve_rls(data), oracle, rtol=1e-10)

    def test_ridge_shrinkage(self):
        # ||theta_hat|| <= ||b|| / lam since H >= lam * I
        rng = np.random.default_rng(3)
        X = rng.standard_normal((20, 3)) * 0.5
        r = rng.standard_normal(20) * 10
        for lam in (0.1, 1.0, 100.0):
            data = accumulate([(X[i], float(r[i])) for i in range(20)], lam=lam, dim=3)
            theta = solve_rls(data)
            assert np.linalg.norm(theta) <= np.linalg.norm(data.b) / lam + 1e-12

    def test_noise_free_consistency(self):
        theta_star = np.array([0.6, -0.3, 0.2])
        rng = np.random.default_rng(21)
        X = rng.standard_normal((10_000, 3)) * 0.5
        pulls = [(X[i], float(X[i] @ theta_star)) for i in range(10_000)]
        theta = solve_rls(accumulate(pulls, lam=1e-8, dim=3))
        np.testing.assert_allclose(theta, theta_star, atol=1e-3)

    def test_non_positive_definite_rejected(self):
        with pytest.raises(ValueError):
            BatchData(H=np.array([[1.0, 2.0], [3.0, 4.0]]), b=np.zeros(2), n_pulls=0, lam=1.0)
        bad = BatchData(H=np.array([[1.0, 0.0], [0.0, -1.0]]), b=np.zeros(2), n_pulls=0, lam=1.0)
        with pytest.raises(ArithmeticError):
            solve_rls(bad)


class TestBestResponse:
    def test_picks_argmax(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0], [0.6, 0.6]])
        assert best_response(np.array([1.0, 0.1]), X) == 0
        assert best_response(np.array([0.1, 1.0]), X) == 1
        assert best_response(np.array([1.0, 1.0]), X) == 2

    def test_tie_goes_to_lowest_position(self):
        X = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert best_response(np.array([1.0, 1.0]), X) == 0

    def test_estimate_batch_bundles_both(self):
        e1 = np.array([1.0, 0.0])
        data = accumulate([(e1, 1.0)] * 4, lam=1.0, dim=2)
        est = estimate_batch(data, np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(est.theta_hat, [0.8, 0.0])
        assert est.best_arm == 1


class TestMahalanobis:
    def test_identity_metric_is_euclidean(self):
        v = np.array([3.0, 4.0])
        np.testing.assert_allclose(mahalanobis_inv(np.eye(2), v), 5.0, rtol=1e-15)

    def test_frozen_diagonal_case(self):
        H = np.diag([4.0, 1.0])
        np.testing.assert_allclose(mahalanobis_inv(H, np.array([2.0, 0.0])), 1.0, rtol=1e-15)

    def test_matches_explicit_inverse(self):
        rng = np.random.default_rng(9)
        A = rng.standard_normal((4, 4))
        H = A @ A.T + np.eye(4)
        for _ in range(10):
            v = rng.standard_normal(4)
            oracle = float(np.sqrt(v @ np.linalg.inv(H) @ v))
            np.testing.assert_allclose(mahalanobis_inv(H, v), oracle, rtol=1e-10)

    def test_zero_vector(self):
        assert mahalanobis_inv(np.eye(3), np.zeros(3)) == 0.0


class TestMaxPairwiseNorm:
    def test_frozen_two_arm_case(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(max_pairwise_norm(np.diag([2.0, 2.0]), X), 1.0, rtol=1e-15)

    def test_single_arm_is_zero(self):
        assert max_pairwise_norm(np.eye(2), np.array([[1.0, 0.0]])) == 0.0

    def test_matches_exhaustive_pair_scan(self):
        rng = np.random.default_rng(14)
        X = rng.standard_normal((10, 4))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        A = rng.standard_normal((4, 4))
        H = A @ A.T + 0.5 * np.eye(4)
        H_inv = np.linalg.inv(H)
        oracle = max(
            float(np.sqrt((X[i] - X[j]) @ H_inv @ (X[i] - X[j])))
            for i in range(10)
            for j in range(i + 1, 10)
        )
        np.testing.assert_allclose(max_pairwise_norm(H, X), oracle, rtol=1e-10)

    def test_identical_arms_give_zero(self):
        X = np.ones((3, 2)) * 0.5
        assert max_pairwise_norm(np.eye(2), X) == 0.0
