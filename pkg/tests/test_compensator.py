from fractions import Fraction as F

import pytest

from martlab.errors import PreconditionError
from martlab.prob import RandomVariable, expectation, l2_norm_sq
from martlab.processes import (
    NEVER,
    ProcessPath,
    StoppingTime,
    is_martingale,
    is_predictable,
    stopped_process,
)
from martlab.compensator import (
    compensator_uniqueness_check,
    discrete_compensator,
    jordan_parts,
    signed_compensator,
    single_jump_process,
)
from martlab.models import poisson_skeleton, randomized_instance


def oracle_compensator(a):
    """Independent route: per step and per block, raw weighted-average increments."""
    space = a.space
    rows = [[F(0)] * space.size]
    for k in range(1, len(a.values)):
        part = a.filtration.partitions[k - 1]
        row = list(rows[-1])
        for block in part.blocks:
            mass = sum(space.probs[i] for i in block)
            mean = (
                sum(space.probs[i] * (a.values[k][i] - a.values[k - 1][i]) for i in block)
                / mass
            )
            for i in block:
                row[i] += mean
        rows.append(row)
    return ProcessPath(a.filtration, rows)


class TestDiscreteCompensator:
    def test_deterministic_increasing(self, two_flip):
        space, filt = two_flip
        a = ProcessPath(filt, [[1] * 4, [3] * 4, [4] * 4])
        b = discrete_compensator(a)
        assert [row[0] for row in b.values] == [0, 2, 3]

    def test_up_counter_has_linear_compensator(self, two_flip):
        space, filt = two_flip
        counter, closed = poisson_skeleton(space, filt, F(1, 2), [(1, 1)])
        b = discrete_compensator(counter)
        assert b.values == oracle_compensator(counter).values
        assert all(set(row) == {F(k, 2)} for k, row in enumerate(b.values))
        assert b.values == closed.values

    def test_martingale_has_zero_compensator(self, walk2):
        assert discrete_compensator(walk2).max_abs() == 0

    def test_matches_oracle_on_randomized_instances(self):
        for seed in range(30):
            inst = randomized_instance(seed)
            b = discrete_compensator(inst.increasing)
            assert b.values == oracle_compensator(inst.increasing).values

    def test_output_contract(self):
        for seed in range(20):
            inst = randomized_instance(seed, max_outcomes=16)
            a = inst.increasing
            b = discrete_compensator(a)
            assert all(v == 0 for v in b.values[0])
            assert is_predictable(b).passed
            assert is_martingale(a - b).passed


class TestSingleJump:
    def test_unit_jump_at_terminal(self, two_flip):
        space, filt = two_flip
        t = StoppingTime.constant(filt, 2)
        a = single_jump_process(t, RandomVariable.constant(space, 1))
        assert [row[0] for row in a.values] == [0, 0, 1]

    def test_first_down_indicator(self, two_flip):
        space, filt = two_flip
        t = StoppingTime(filt, [NEVER, 2, 1, 1])
        a = single_jump_process(t, RandomVariable.constant(space, 1))
        assert [row[0] for row in a.values] == [0, 0, 0]  # uu never jumps
        assert [row[1] for row in a.values] == [0, 0, 1]
        assert [row[2] for row in a.values] == [0, 1, 1]
        assert [row[3] for row in a.values] == [0, 1, 1]

    def test_zero_payout(self, two_flip):
        space, filt = two_flip
        t = StoppingTime.constant(filt, 1)
        a = single_jump_process(t, RandomVariable.constant(space, 0))
        assert a.max_abs() == 0

    def test_zero_stop_time_rejected(self, two_flip):
        space, filt = two_flip
        t = StoppingTime.constant(filt, 0)
        with pytest.raises(PreconditionError):
            single_jump_process(t, RandomVariable.constant(space, 1))

    def test_negative_payout_rejected(self, two_flip):
        space, filt = two_flip
        t = StoppingTime.constant(filt, 1)
        with pytest.raises(PreconditionError):
            single_jump_process(t, RandomVariable(space, [1, 1, -1, 1]))

    def test_unmeasurable_payout_rejected(self, two_flip):
        space, filt = two_flip
        t = StoppingTime.constant(filt, 1)
        # at step 1 only the first coin is known; paying by the second peeks ahead
        with pytest.raises(PreconditionError):
            single_jump_process(t, RandomVariable(space, [1, 0, 1, 0]))


class TestUniqueness:
    def test_same_candidate_passes(self, two_flip):
        space, filt = two_flip
        counter, _ = poisson_skeleton(space, filt, F(1, 2), [(1, 1)])
        b = discrete_compensator(counter)
        assert compensator_uniqueness_check(counter, b, b).passed

    def test_drifted_candidate_fails_precondition(self, two_flip):
        space, filt = two_flip
        counter, _ = poisson_skeleton(space, filt, F(1, 2), [(1, 1)])
        b = discrete_compensator(counter)
        drift = ProcessPath(filt, [[0] * 4, [1] * 4, [2] * 4])
        with pytest.raises(PreconditionError):
            compensator_uniqueness_check(counter, b, b + drift)

    def test_independent_construction_agrees(self):
        for seed in range(25):
            inst = randomized_instance(seed)
            a = inst.increasing
            assert compensator_uniqueness_check(
                a, discrete_compensator(a), oracle_compensator(a)
            ).passed


class TestAlgebraicLaws:
    def test_additivity(self):
        for seed in range(25):
            inst = randomized_instance(seed)
            a, m = inst.increasing, inst.martingale
            lhs = discrete_compensator(a + m)
            rhs = discrete_compensator(a) + discrete_compensator(m)
            assert lhs.values == rhs.values

    def test_increasing_input_gives_increasing_output(self):
        for seed in range(25):
            inst = randomized_instance(seed)
            b = discrete_compensator(inst.increasing)
            for k in range(1, len(b.values)):
                assert all(v >= 0 for v in b.increment(k).values)

    def test_idempotent_on_predictable_null_at_zero(self):
        for seed in range(25):
            inst = randomized_instance(seed)
            p = inst.predictable
            shifted = p - ProcessPath(p.filtration, [p.values[0]] * len(p.values))
            assert discrete_compensator(shifted).values == shifted.values

    def test_commutes_with_stopping(self):
        for seed in range(25):
            inst = randomized_instance(seed)
            a, t = inst.increasing, inst.stopping_time
            lhs = discrete_compensator(stopped_process(a, t))
            rhs = stopped_process(discrete_compensator(a), t)
            assert lhs.values == rhs.values

    def test_jordan_split_agrees_with_direct(self):
        for seed in range(25):
            inst = randomized_instance(seed)
            m = inst.martingale
            pos, neg = jordan_parts(m)
            for k in range(1, len(m.values)):
                dm = m.increment(k)
                dv = (pos.increment(k) + neg.increment(k)).values
                assert all(abs(x) == y for x, y in zip(dm.values, dv))
            assert signed_compensator(m).max_abs() == 0


class TestSecondMomentBounds:
    def test_single_jump_bounds(self):
        checked = 0
        for seed in range(200):
            inst = randomized_instance(seed, max_outcomes=16)
            if any(s == 0 for s in inst.stopping_time.stop_index):
                continue
            a = single_jump_process(inst.stopping_time, inst.jump_value)
            bound = max(inst.jump_value.values)
            b = discrete_compensator(a)
            m = a - b
            last = a.last_index
            assert l2_norm_sq(b.at(last)) <= 2 * bound**2
            assert l2_norm_sq(m.at(last)) <= 12 * bound**2
            checked += 1
        assert checked >= 50

    def test_compensator_mean_matches_jump_mean(self):
        for seed in range(30):
            inst = randomized_instance(seed, max_outcomes=16)
            if any(s == 0 for s in inst.stopping_time.stop_index):
                continue
            a = single_jump_process(inst.stopping_time, inst.jump_value)
            b = discrete_compensator(a)
            last = a.last_index
            assert expectation(b.at(last)) == expectation(a.at(last))
