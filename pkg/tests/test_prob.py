from fractions import Fraction as F

import pytest

from martlab.errors import ConstructionError, PreconditionError
from martlab.prob import (
    Filtration,
    Partition,
    RandomVariable,
    SampleSpace,
    conditional_expectation,
    expectation,
    is_measurable,
    l2_inner,
    l2_norm_sq,
)
from martlab.models import randomized_instance


def brute_expectation(space, values):
    total = F(0)
    for p, v in zip(space.probs, values):
        total += p * v
    return total


def brute_block_average(space, values, block):
    mass = sum(space.probs[i] for i in block)
    return sum(space.probs[i] * values[i] for i in block) / mass


class TestExpectation:
    def test_constant(self, uniform4):
        assert expectation(RandomVariable.constant(uniform4, 7)) == 7

    def test_symmetric_cancellation(self, uniform4):
        assert expectation(RandomVariable(uniform4, [1, 1, -1, -1])) == 0

    def test_uniform_average(self, uniform4):
        x = RandomVariable(uniform4, [1, 2, 3, 4])
        assert expectation(x) == brute_expectation(uniform4, x.values) == F(5, 2)

    def test_length_mismatch(self, uniform4):
        with pytest.raises(ConstructionError):
            RandomVariable(uniform4, [1, 2, 3])


class TestConditionalExpectation:
    def test_trivial_partition_gives_mean(self, uniform4):
        x = RandomVariable(uniform4, [3, 1, 4, 0])
        g = Partition.trivial(4)
        out = conditional_expectation(x, g)
        assert set(out.values) == {expectation(x)}

    def test_singletons_give_back_x(self, uniform4):
        x = RandomVariable(uniform4, [3, 1, 4, 0])
        assert conditional_expectation(x, Partition.singletons(4)).values == x.values

    def test_pair_blocks(self, uniform4, pair_partition):
        x = RandomVariable(uniform4, [2, 0, 5, 1])
        out = conditional_expectation(x, pair_partition)
        assert out.values == (1, 1, 3, 3)
        for block in pair_partition.blocks:
            expected = brute_block_average(uniform4, x.values, block)
            assert all(out.values[i] == expected for i in block)

    def test_result_is_measurable(self, uniform4, pair_partition):
        x = RandomVariable(uniform4, [2, 0, 5, 1])
        assert is_measurable(conditional_expectation(x, pair_partition), pair_partition)

    def test_nonuniform_weighting(self):
        space = SampleSpace(["a", "b"], [F(1, 3), F(2, 3)])
        x = RandomVariable(space, [3, 9])
        out = conditional_expectation(x, Partition.trivial(2))
        assert out.values[0] == F(1, 3) * 3 + F(2, 3) * 9


class TestMeasurability:
    def test_constant_any_partition(self, uniform4, pair_partition):
        assert is_measurable(RandomVariable.constant(uniform4, 5), pair_partition)

    def test_block_constant(self, uniform4, pair_partition):
        assert is_measurable(RandomVariable(uniform4, [1, 1, 2, 2]), pair_partition)

    def test_block_split(self, uniform4, pair_partition):
        assert not is_measurable(RandomVariable(uniform4, [1, 2, 2, 2]), pair_partition)


class TestL2:
    def test_disjoint_indicators_orthogonal(self, uniform4):
        a = RandomVariable.indicator(uniform4, [0, 1])
        b = RandomVariable.indicator(uniform4, [2, 3])
        assert l2_inner(a, b) == 0

    def test_sign_variable_has_unit_norm(self, uniform4):
        x = RandomVariable(uniform4, [1, 1, -1, -1])
        assert l2_inner(x, x) == 1

    def test_inner_against_indicator(self, uniform4):
        x = RandomVariable(uniform4, [1, 2, 3, 4])
        y = RandomVariable(uniform4, [1, 0, 0, 0])
        assert l2_inner(x, y) == F(1, 4)

    def test_space_mismatch(self, uniform4):
        other = SampleSpace.uniform(["x", "y"])
        with pytest.raises(PreconditionError):
            l2_inner(RandomVariable.constant(uniform4, 1), RandomVariable.constant(other, 1))


class TestSpaceInvariants:
    def test_probs_must_sum_to_one(self):
        with pytest.raises(ConstructionError):
            SampleSpace(["a", "b"], [F(1, 2), F(1, 3)])

    def test_zero_probability_rejected(self):
        with pytest.raises(ConstructionError):
            SampleSpace(["a", "b"], [F(1), F(0)])

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ConstructionError):
            SampleSpace(["a", "a"], [F(1, 2), F(1, 2)])

    def test_floats_rejected(self):
        with pytest.raises(ConstructionError):
            SampleSpace(["a", "b"], [0.5, 0.5])


class TestPartitionAndFiltration:
    def test_blocks_must_cover(self):
        with pytest.raises(ConstructionError):
            Partition([[0, 1]], 3)

    def test_blocks_must_be_disjoint(self):
        with pytest.raises(ConstructionError):
            Partition([[0, 1], [1, 2]], 3)

    def test_refinement_enforced(self, uniform4):
        fine = Partition.singletons(4)
        coarse = Partition([[0, 1], [2, 3]], 4)
        Filtration(uniform4, [0, 1], [coarse, fine])
        with pytest.raises(ConstructionError):
            Filtration(uniform4, [0, 1], [fine, coarse])

    def test_times_start_at_zero(self, uniform4):
        with pytest.raises(ConstructionError):
            Filtration(uniform4, [1, 2], [Partition.trivial(4), Partition.trivial(4)])

    def test_canonical_block_order(self):
        p = Partition([[3, 2], [1, 0]], 4)
        assert p.blocks == ((0, 1), (2, 3))


class TestConditionalExpectationLaws:
    """Exact laws on randomized filtrations up to 64 outcomes."""

    def test_tower_property(self):
        for seed in range(40):
            inst = randomized_instance(seed)
            x = inst.martingale.at(inst.martingale.last_index)
            parts = inst.filtration.partitions
            for k in range(len(parts) - 1):
                fine, coarse = parts[k + 1], parts[k]
                once = conditional_expectation(x, coarse)
                twice = conditional_expectation(conditional_expectation(x, fine), coarse)
                assert once.values == twice.values

    def test_projection_preserves_mean(self):
        for seed in range(40):
            inst = randomized_instance(seed)
            x = inst.increasing.at(inst.increasing.last_index)
            for part in inst.filtration.partitions:
                assert expectation(conditional_expectation(x, part)) == expectation(x)

    def test_linearity(self, uniform4, pair_partition):
        x = RandomVariable(uniform4, [2, 0, 5, 1])
        y = RandomVariable(uniform4, [1, 7, -2, 3])
        lhs = conditional_expectation(x * 3 + y, pair_partition)
        rhs = conditional_expectation(x, pair_partition) * 3 + conditional_expectation(
            y, pair_partition
        )
        assert lhs.values == rhs.values

    def test_positivity(self):
        for seed in range(20):
            inst = randomized_instance(seed)
            a = inst.increasing.at(inst.increasing.last_index)
            assert all(v >= 0 for v in a.values)
            for part in inst.filtration.partitions:
                assert all(v >= 0 for v in conditional_expectation(a, part).values)

    def test_l2_projection_orthogonality(self, uniform4, pair_partition):
        # the projection residual is orthogonal to every block-measurable variable
        x = RandomVariable(uniform4, [2, 0, 5, 1])
        residual = x - conditional_expectation(x, pair_partition)
        for block in pair_partition.blocks:
            probe = RandomVariable.indicator(uniform4, block)
            assert l2_inner(residual, probe) == 0
        assert l2_norm_sq(residual) == l2_norm_sq(x) - l2_norm_sq(
            conditional_expectation(x, pair_partition)
        )
