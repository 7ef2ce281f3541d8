"""Core types and the doubly-exponential schedule."""

import numpy as np
import pytest

from blae.core import (
    ArmSet,
    BanditInstance,
    RunTrace,
    ScheduleParams,
    batch_budget,
    batch_count_bound,
    checkpoint_rounds,
)


class TestBatchBudget:
    def test_powers_of_two_horizon(self):
        # 65536 = 2^16 makes every budget an exact power of two
        assert batch_budget(65536, 1) == 256.0
        assert batch_budget(65536, 2) == 4096.0
        assert batch_budget(65536, 3) == 16384.0

    def test_strictly_increasing_in_ell(self):
        for T in (4, 100, 65536, 100_000):
            budgets = [batch_budget(T, ell) for ell in range(1, 9)]
            assert all(b2 > b1 for b1, b2 in zip(budgets, budgets[1:]))
            assert all(b <= T for b in budgets)

    def test_penultimate_budget_at_least_half_horizon(self):
        # guarantees the outer loop finishes within the batch bound
        for T in (4, 5, 16, 100, 65536, 100_000, 10**6):
            bound = batch_count_bound(T)
            assert batch_budget(T, bound - 1) >= T / 2

    def test_rejects_degenerate_arguments(self):
        with pytest.raises(ValueError):
            batch_budget(3, 1)
        with pytest.raises(ValueError):
            batch_budget(16, 0)
        with pytest.raises(ValueError):
            batch_budget(16, -2)


class TestBatchCountBound:
    def test_frozen_values(self):
        assert batch_count_bound(65536) == 5
        assert batch_count_bound(4) == 2
        assert batch_count_bound(100_000) == 6

    def test_rejects_small_horizon(self):
        with pytest.raises(ValueError):
            batch_count_bound(3)


class TestCheckpointRounds:
    def test_stride_divides_horizon(self):
        np.testing.assert_array_equal(checkpoint_rounds(100, 25), [25, 50, 75, 100])

    def test_final_round_always_present(self):
        np.testing.assert_array_equal(checkpoint_rounds(10, 4), [4, 8, 10])
        np.testing.assert_array_equal(checkpoint_rounds(3, 10), [3])

    def test_stride_one(self):
        np.testing.assert_array_equal(checkpoint_rounds(5, 1), [1, 2, 3, 4, 5])

    def test_invalid_stride(self):
        with pytest.raises(ValueError):
            checkpoint_rounds(10, 0)


class TestArmSet:
    def test_valid_construction(self):
        arms = ArmSet(np.eye(3))
        assert arms.n_arms == 3
        assert arms.dim == 3

    def test_rows_are_immutable(self):
        arms = ArmSet(np.eye(2))
        with pytest.raises(ValueError):
            arms.features[0, 0] = 2.0

    def test_rejects_oversized_norms(self):
        with pytest.raises(ValueError):
            ArmSet(np.array([[1.0, 1.0]]))

    def test_accepts_norms_within_tolerance(self):
        x = np.array([[1.0 + 5e-10, 0.0]])
        assert ArmSet(x).n_arms == 1

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            ArmSet(np.zeros((0, 2)))
        with pytest.raises(ValueError):
            ArmSet(np.zeros((3, 1)))
        with pytest.raises(ValueError):
            ArmSet(np.zeros(4))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ArmSet(np.array([[np.nan, 0.0]]))


class TestBanditInstance:
    def _instance(self):
        arms = ArmSet(np.array([[1.0, 0.0], [0.0, 1.0], [0.6, 0.0]]))
        return BanditInstance(arms, np.array([0.8, 0.1]))

    def test_mean_rewards_and_gaps(self):
        inst = self._instance()
        np.testing.assert_allclose(inst.mean_rewards, [0.8, 0.1, 0.48])
        assert inst.best_arm == 0
        np.testing.assert_allclose(inst.gaps, [0.0, 0.7, 0.32])

    def test_best_arm_ties_break_low(self):
        arms = ArmSet(np.array([[0.5, 0.0], [0.5, 0.0], [0.0, 0.5]]))
        inst = BanditInstance(arms, np.array([1.0, 0.0]))
        assert inst.best_arm == 0

    def test_rejects_oversized_theta(self):
        arms = ArmSet(np.eye(2))
        with pytest.raises(ValueError):
            BanditInstance(arms, np.array([1.0, 1.0]))

    def test_rejects_dimension_mismatch(self):
        arms = ArmSet(np.eye(2))
        with pytest.raises(ValueError):
            BanditInstance(arms, np.array([0.5, 0.0, 0.0]))

    def test_rejects_negative_noise(self):
        arms = ArmSet(np.eye(2))
        with pytest.raises(ValueError):
            BanditInstance(arms, np.array([0.5, 0.0]), noise_sigma=-1.0)


class TestScheduleParams:
    def test_delta_defaults_to_inverse_horizon(self):
        params = ScheduleParams(T=1000)
        assert params.effective_delta == 1e-3
        assert params.lam == 1.0

    def test_explicit_delta(self):
        assert ScheduleParams(T=16, delta=0.05).effective_delta == 0.05

    def test_zeta_is_pinned(self):
        with pytest.raises(ValueError):
            ScheduleParams(T=16, zeta=0.25)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            ScheduleParams(T=3)
        with pytest.raises(ValueError):
            ScheduleParams(T=16, lam=0.0)
        with pytest.raises(ValueError):
            ScheduleParams(T=16, delta=1.5)


class TestRunTrace:
    def _trace(self, **overrides):
        fields = dict(
            rounds=np.array([1, 2, 3, 4]),
            cumulative_regret=np.array([0.0, 0.5, 0.5, 1.0]),
            batch_boundaries=(2, 4),
            survivors=((0, 1), (0,)),
            optimal_arm_retained=(True, True),
        )
        fields.update(overrides)
        return RunTrace(**fields)

    def test_properties(self):
        trace = self._trace()
        assert trace.horizon == 4
        assert trace.n_batches == 2
        assert trace.final_regret == 1.0

    def test_rejects_decreasing_regret(self):
        with pytest.raises(ValueError):
            self._trace(cumulative_regret=np.array([0.0, 1.0, 0.5, 1.0]))

    def test_rejects_non_increasing_rounds(self):
        with pytest.raises(ValueError):
            self._trace(rounds=np.array([1, 2, 2, 4]))

    def test_rejects_boundary_mismatch(self):
        with pytest.raises(ValueError):
            self._trace(batch_boundaries=(2, 3))
        with pytest.raises(ValueError):
            self._trace(batch_boundaries=(4, 2))
        with pytest.raises(ValueError):
            self._trace(batch_boundaries=())

    def test_rejects_misaligned_arrays(self):
        with pytest.raises(ValueError):
            self._trace(cumulative_regret=np.array([0.0, 0.5]))
