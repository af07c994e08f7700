"""Coalition plans, kernel weights and membership matrices."""

import numpy as np
import pytest
import scipy.stats

from coalesce import (
    Coalition,
    PlanSizeError,
    build_Z,
    enumerate_all,
    sample_coalitions,
    shapley_kernel_weight,
)
from coalesce.coalitions import popcount


class TestKernelWeight:
    def test_anchors_are_exactly_1e6(self):
        assert shapley_kernel_weight(16, 0) == 1e6
        assert shapley_kernel_weight(16, 16) == 1e6
        assert shapley_kernel_weight(1, 0) == 1e6

    @pytest.mark.parametrize("p,s,expected", [
        (3, 1, 1 / 3),
        (4, 2, 0.125),
        (2, 1, 0.5),
    ])
    def test_interior_values(self, p, s, expected):
        assert shapley_kernel_weight(p, s) == pytest.approx(expected, rel=1e-15)

    def test_symmetry_exact(self):
        for p in range(2, 21):
            for s in range(1, p):
                assert shapley_kernel_weight(p, s) == shapley_kernel_weight(p, p - s)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            shapley_kernel_weight(4, 5)
        with pytest.raises(ValueError):
            shapley_kernel_weight(4, -1)
        with pytest.raises(ValueError):
            shapley_kernel_weight(0, 0)

    def test_anchor_weight_override(self):
        assert shapley_kernel_weight(5, 0, anchor_weight=42.0) == 42.0


class TestPopcount:
    def test_matches_bit_count(self):
        masks = np.arange(1 << 12, dtype=np.int64)
        expected = np.array([int(m).bit_count() for m in range(1 << 12)])
        assert np.array_equal(popcount(masks), expected)

    def test_wide_masks(self):
        masks = np.array([(1 << 32) - 1, 0x12345678], dtype=np.int64)
        assert popcount(masks).tolist() == [32, int(0x12345678).bit_count()]

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            popcount(np.array([1 << 33], dtype=np.int64))


class TestEnumerateAll:
    def test_p2_masks_and_weights(self):
        plan = enumerate_all(2)
        assert plan.masks.tolist() == [0, 1, 2, 3]
        assert plan.weights.tolist() == [1e6, 0.5, 0.5, 1e6]

    def test_p1_is_anchors_only(self):
        plan = enumerate_all(1)
        assert plan.masks.tolist() == [0, 1]
        assert plan.weights.tolist() == [1e6, 1e6]

    def test_p16_has_65536_coalitions(self):
        assert len(enumerate_all(16)) == 65536

    def test_binary_counting_order_and_uniqueness(self):
        plan = enumerate_all(5)
        assert np.array_equal(plan.masks, np.arange(32))
        assert plan.masks[0] == 0 and plan.masks[-1] == 31

    def test_cap(self):
        with pytest.raises(PlanSizeError, match="sample"):
            enumerate_all(21)
        assert len(enumerate_all(5, cap=5)) == 32


class TestSampleCoalitions:
    def test_seed_determinism(self):
        first = sample_coalitions(3, 1000, seed=7)
        second = sample_coalitions(3, 1000, seed=7)
        assert np.array_equal(first.masks, second.masks)
        assert np.array_equal(first.weights, second.weights)

    def test_anchors_first_and_last(self):
        plan = sample_coalitions(6, 50, seed=1)
        assert plan.masks[0] == 0
        assert plan.masks[-1] == (1 << 6) - 1
        assert plan.weights[0] == plan.weights[-1] == 1e6

    def test_no_duplicates_and_positive_weights(self):
        plan = sample_coalitions(8, 2000, seed=3)
        assert len(np.unique(plan.masks)) == len(plan)
        assert np.all(plan.weights > 0)

    def test_interior_weights_sum_to_draws(self):
        plan = sample_coalitions(8, 2000, seed=3)
        assert plan.weights[1:-1].sum() == 2000.0

    def test_size_distribution(self):
        # draws (recovered from merged weights) follow the kernel-weight law
        p, n_draws = 10, 4000
        plan = sample_coalitions(p, n_draws, seed=99)
        sizes = plan.sizes[1:-1]
        counts = np.zeros(p - 1)
        for size, weight in zip(sizes, plan.weights[1:-1]):
            counts[size - 1] += weight
        interior = np.arange(1, p)
        probs = (p - 1) / (interior * (p - interior))
        probs /= probs.sum()
        result = scipy.stats.chisquare(counts, n_draws * probs)
        assert result.pvalue > 0.0027

    def test_p1_plan_is_anchors(self):
        plan = sample_coalitions(1, 100, seed=0)
        assert plan.masks.tolist() == [0, 1]

    def test_preconditions(self):
        with pytest.raises(ValueError):
            sample_coalitions(0, 10, seed=0)
        with pytest.raises(ValueError):
            sample_coalitions(4, 0, seed=0)


class TestBuildZ:
    def test_p1(self):
        Z = build_Z(enumerate_all(1))
        assert Z.tolist() == [[1.0, 0.0], [1.0, 1.0]]

    def test_p2(self):
        Z = build_Z(enumerate_all(2))
        assert Z.tolist() == [[1, 0, 0], [1, 1, 0], [1, 0, 1], [1, 1, 1]]

    def test_row_sums(self):
        plan = enumerate_all(6)
        Z = build_Z(plan)
        assert np.array_equal(Z.sum(axis=1), 1 + plan.sizes)

    def test_p_mismatch(self):
        with pytest.raises(ValueError):
            build_Z(enumerate_all(3), p=4)


class TestCoalition:
    def test_from_mask(self):
        coalition = Coalition.from_mask(0b1011)
        assert coalition.size == 3
        assert coalition.contains(0) and coalition.contains(3)
        assert not coalition.contains(2)

    def test_size_validated(self):
        with pytest.raises(ValueError):
            Coalition(mask=3, size=1)
