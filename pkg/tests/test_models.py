from fractions import Fraction as F

import pytest

from martlab.errors import PreconditionError
from martlab.prob import conditional_expectation
from martlab.processes import is_adapted, is_martingale, is_predictable, total_variation
from martlab.compensator import discrete_compensator
from martlab.models import (
    XorShift64,
    binary_tree_space,
    dyadic_walk_model,
    jump_tree_space,
    poisson_skeleton,
    random_walk,
    randomized_instance,
)

MASK = (1 << 64) - 1


def reference_xorshift(seed):
    """The generator's update rule, written out independently."""
    x = (seed & MASK) or 0x9E3779B97F4A7C15
    while True:
        x ^= x >> 12
        x = (x ^ (x << 25)) & MASK
        x ^= x >> 27
        yield (x * 2685821657736338717) & MASK


class TestXorShift:
    def test_matches_reference_stream(self):
        for seed in (0, 1, 42, 2**63 + 5):
            rng = XorShift64(seed)
            ref = reference_xorshift(seed)
            assert [rng.next_u64() for _ in range(20)] == [next(ref) for _ in range(20)]

    def test_below_range(self):
        rng = XorShift64(9)
        assert all(0 <= rng.below(7) < 7 for _ in range(100))


class TestBinaryTree:
    def test_depth_one(self):
        space, filt = binary_tree_space(1, F(1, 2))
        assert space.outcomes == ("u", "d")
        assert space.probs == (F(1, 2), F(1, 2))

    def test_depth_two_uniform(self):
        space, filt = binary_tree_space(2, F(1, 2))
        assert space.size == 4
        assert all(p == F(1, 4) for p in space.probs)
        assert filt.partitions[1].blocks == ((0, 1), (2, 3))

    def test_depth_two_biased_products(self):
        space, _ = binary_tree_space(2, F(1, 3))
        assert space.probs == (F(1, 9), F(2, 9), F(2, 9), F(4, 9))

    def test_depth_caps(self):
        with pytest.raises(PreconditionError):
            binary_tree_space(0, F(1, 2))
        with pytest.raises(PreconditionError):
            binary_tree_space(17, F(1, 2))
        with pytest.raises(PreconditionError):
            binary_tree_space(3, 1)


class TestRandomWalk:
    def test_fair_half_steps(self):
        space, filt = binary_tree_space(2, F(1, 2))
        m = random_walk(space, filt, F(1, 2), 1)
        steps = {m.values[1][i] - m.values[0][i] for i in range(4)}
        assert steps == {F(1, 2), F(-1, 2)}
        assert is_martingale(m).passed

    def test_biased_compensated_steps(self):
        space, filt = binary_tree_space(2, F(2, 3))
        m = random_walk(space, filt, F(2, 3), 1)
        steps = {m.values[1][i] - m.values[0][i] for i in range(4)}
        assert steps == {F(1, 3), F(-2, 3)}
        drift = conditional_expectation(m.increment(1), filt.partitions[0])
        assert drift.max_abs() == 0
        assert is_martingale(m).passed

    def test_zero_scale(self):
        space, filt = binary_tree_space(2, F(1, 2))
        assert random_walk(space, filt, F(1, 2), 0).max_abs() == 0


class TestPoissonSkeleton:
    def test_unit_jumps_give_up_counter(self):
        space, filt = binary_tree_space(2, F(1, 2))
        jumps, companion = poisson_skeleton(space, filt, F(1, 2), [(1, 1)])
        b = discrete_compensator(jumps)
        assert b.values == companion.values
        assert [row[0] for row in companion.values] == [0, F(1, 2), 1]

    def test_no_jumps(self):
        space, filt = binary_tree_space(2, F(1, 2))
        jumps, companion = poisson_skeleton(space, filt, 0, [(5, 1)])
        assert jumps.max_abs() == 0
        assert companion.max_abs() == 0

    def test_degenerate_law_rejected(self):
        with pytest.raises(PreconditionError):
            jump_tree_space(2, 0, [(1, 1)])

    def test_mixed_law_mean(self):
        space, filt = binary_tree_space(2, F(1, 2))
        jumps, companion = poisson_skeleton(space, filt, 1, [(2, F(1, 2)), (0, F(1, 2))])
        assert [row[0] for row in companion.values] == [0, 1, 2]
        assert discrete_compensator(jumps).values == companion.values

    def test_three_way_law(self):
        law = [(1, F(1, 4)), (3, F(3, 4))]
        space, filt = jump_tree_space(2, F(1, 2), law)
        assert space.size == 9
        jumps, companion = poisson_skeleton(space, filt, F(1, 2), law)
        assert discrete_compensator(jumps).values == companion.values
        per_step = F(1, 2) * (F(1, 4) * 1 + F(3, 4) * 3)
        assert companion.values[2][0] == 2 * per_step

    def test_wrong_space_rejected(self):
        space, filt = binary_tree_space(2, F(1, 2))
        with pytest.raises(PreconditionError):
            poisson_skeleton(space, filt, F(1, 3), [(1, 1)])


class TestRandomizedInstance:
    def test_seed_determinism(self):
        a = randomized_instance(42)
        b = randomized_instance(42)
        assert a.space == b.space
        assert a.martingale.values == b.martingale.values
        assert a.stopping_time.stop_index == b.stopping_time.stop_index

    def test_different_seeds_differ(self):
        assert randomized_instance(1).space != randomized_instance(2).space

    def test_emitted_objects_pass_their_verifiers(self):
        for seed in range(60):
            inst = randomized_instance(seed)
            assert is_adapted(inst.increasing).passed
            assert is_martingale(inst.martingale).passed
            assert is_predictable(inst.predictable).passed
            v = total_variation(inst.increasing)
            assert v.values == (inst.increasing - type(inst.increasing)(
                inst.increasing.filtration,
                [inst.increasing.values[0]] * len(inst.increasing.values),
            )).values

    def test_caps_enforced(self):
        with pytest.raises(PreconditionError):
            randomized_instance(1, max_outcomes=65)
        with pytest.raises(PreconditionError):
            randomized_instance(1, max_steps=9)

    def test_sizes_respect_caps(self):
        for seed in range(40):
            inst = randomized_instance(seed, max_outcomes=10, max_steps=3)
            assert 2 <= inst.space.size <= 10
            assert 1 <= inst.filtration.last_index <= 3


class TestDyadicWalkModel:
    def test_shapes(self):
        d = dyadic_walk_model(4, 2)
        assert len(d.filtration) == 17
        assert d.space.size == 16
        assert is_martingale(d.walk).passed
        assert is_adapted(d.up_counter).passed
        assert is_adapted(d.single_jump).passed

    def test_walk_moves_only_at_branch_times(self):
        d = dyadic_walk_model(4, 1)
        for k in range(1, len(d.filtration)):
            if (k % 8) != 0:  # branch stride is 2^(4-1)
                assert d.walk.increment(k).max_abs() == 0

    def test_jump_time_is_first_down_branch(self):
        from martlab.processes import NEVER

        d = dyadic_walk_model(3, 1, horizon=1)
        # outcomes uu, ud, du, dd; branch times 1/2 and 1 sit at grid indices 4 and 8
        assert d.jump_time.stop_index == (NEVER, 8, 4, 4)
        assert d.jump_time_capped.stop_index == (8, 8, 4, 4)

    def test_branch_level_beyond_grid_rejected(self):
        with pytest.raises(PreconditionError):
            dyadic_walk_model(2, 3)
