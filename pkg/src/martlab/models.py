"""Deterministic, seedable model generators.

Randomness comes from an explicit xorshift64* generator so that a given
seed produces byte-identical objects on every platform:

    x ^= x >> 12;  x ^= (x << 25) & 2^64-1;  x ^= x >> 27
    output = (x * 2685821657736338717) mod 2^64

All model parameters are rationals, never floats, so closed-form
compensators and martingale identities compare exactly downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import PreconditionError
from .prob import (
    Filtration,
    Partition,
    RandomVariable,
    RationalLike,
    SampleSpace,
    ZERO,
    conditional_expectation,
    rat,
)
from .processes import NEVER, ProcessPath, StoppingTime

_MASK64 = (1 << 64) - 1
_MULT = 2685821657736338717


class XorShift64(object):
    """xorshift64* with 64-bit state; state 0 is remapped to a fixed constant."""

    def __init__(self, seed: int):
        self.state = (seed & _MASK64) or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * _MULT) & _MASK64

    def below(self, n: int) -> int:
        """Uniform-ish integer in 0..n-1 (modulo bias is irrelevant here)."""
        if n <= 0:
            raise PreconditionError("below() needs n >= 1")
        return self.next_u64() % n

    def rational(self, max_numer: int = 8, max_denom: int = 8) -> Fraction:
        """Small signed rational with numerator in -max..max and denominator 1..max."""
        num = self.below(2 * max_numer + 1) - max_numer
        den = self.below(max_denom) + 1
        return Fraction(num, den)

    def positive_rational(self, max_numer: int = 8, max_denom: int = 8) -> Fraction:
        num = self.below(max_numer) + 1
        den = self.below(max_denom) + 1
        return Fraction(num, den)


def _product_tree(
    depth: int, step_labels: Sequence[str], step_probs: Sequence[Fraction], times: Sequence[Fraction]
) -> tuple[SampleSpace, Filtration]:
    """Product space of ``depth`` i.i.d. steps, filtration revealing one step per time."""
    m = len(step_labels)
    outcomes: list[str] = []
    probs: list[Fraction] = []
    for code in range(m**depth):
        word = []
        c = code
        for _ in range(depth):
            word.append(c % m)
            c //= m
        word.reverse()
        outcomes.append("".join(step_labels[w] for w in word))
        p = Fraction(1)
        for w in word:
            p *= step_probs[w]
        probs.append(p)
    space = SampleSpace(outcomes, probs)
    partitions = []
    for k in range(depth + 1):
        width = m ** (depth - k)
        blocks = [range(b, b + width) for b in range(0, m**depth, width)]
        partitions.append(Partition(blocks, space.size))
    return space, Filtration(space, times, partitions)


def binary_tree_space(depth: int, p_up: RationalLike) -> tuple[SampleSpace, Filtration]:
    """Coin-sequence space of 2^depth outcomes with product probabilities.

    Outcome labels are words over {u, d}; the step-k partition groups
    outcomes by their first k letters, so refinement holds by construction.
    """
    if not 1 <= depth <= 16:
        raise PreconditionError(f"depth {depth} out of range 1..16")
    p = rat(p_up)
    if not 0 < p < 1:
        raise PreconditionError(f"p_up must be strictly between 0 and 1, got {p}")
    times = [Fraction(k) for k in range(depth + 1)]
    return _product_tree(depth, ("u", "d"), (p, 1 - p), times)


def _tree_arity(space: SampleSpace, filtration: Filtration) -> int:
    """Branching factor of a product-tree filtration, or raise."""
    depth = len(filtration) - 1
    if depth < 1:
        raise PreconditionError("tree filtration needs at least one step")
    m = len(filtration.partitions[1].blocks)
    if m < 2 or space.size != m**depth:
        raise PreconditionError(
            f"space of {space.size} outcomes is not a depth-{depth} product tree"
        )
    return m


def random_walk(
    space: SampleSpace,
    filtration: Filtration,
    p_up: RationalLike,
    scale: RationalLike = 1,
) -> ProcessPath:
    """Compensated walk on a binary tree: an exact martingale for any p_up.

    Up-steps add scale*(1 - p_up), down-steps subtract scale*p_up, so the
    conditional increment mean is zero whatever the branch probability.
    """
    p = rat(p_up)
    s = rat(scale)
    depth = len(filtration) - 1
    if _tree_arity(space, filtration) != 2:
        raise PreconditionError("random_walk needs a binary tree space")
    up = s * (1 - p)
    down = -s * p
    rows: list[list[Fraction]] = [[ZERO] * space.size]
    for k in range(1, depth + 1):
        row = []
        for i, label in enumerate(space.outcomes):
            step = up if label[k - 1] == "u" else down
            row.append(rows[k - 1][i] + step)
        rows.append(row)
    return ProcessPath(filtration, rows)


def jump_tree_space(
    depth: int, p_jump: RationalLike, jump_law: Sequence[tuple[RationalLike, RationalLike]]
) -> tuple[SampleSpace, Filtration]:
    """Product tree whose per-step branches are (no jump) plus one branch per jump size.

    Zero-probability branches are dropped so the space invariant (strictly
    positive probabilities) holds.
    """
    branches = _jump_branches(p_jump, jump_law)
    labels = [lab for lab, _, _ in branches]
    probs = [q for _, q, _ in branches]
    times = [Fraction(k) for k in range(depth + 1)]
    return _product_tree(depth, labels, probs, times)


def _jump_branches(
    p_jump: RationalLike, jump_law: Sequence[tuple[RationalLike, RationalLike]]
) -> list[tuple[str, Fraction, Fraction]]:
    """(label, probability, jump size) per step branch; validates the law.

    Jump branches come first in law order, the no-jump branch last; branches
    of probability zero are dropped.
    """
    p = rat(p_jump)
    if not 0 <= p <= 1:
        raise PreconditionError(f"p_jump must lie in [0, 1], got {p}")
    law = [(rat(v), rat(q)) for v, q in jump_law]
    if any(q < 0 for _, q in law):
        raise PreconditionError("jump law probabilities must be nonnegative")
    total = sum((q for _, q in law), ZERO)
    if total != 1:
        raise PreconditionError(f"jump law probabilities sum to {total}, expected 1")
    branches: list[tuple[str, Fraction, Fraction]] = []
    for j, (value, q) in enumerate(law):
        if p * q > 0:
            branches.append((chr(ord("a") + j), p * q, value))
    if p < 1:
        branches.append(("o", 1 - p, ZERO))
    if len(branches) < 2:
        raise PreconditionError("jump model is deterministic; needs at least two branches per step")
    return branches


def poisson_skeleton(
    space: SampleSpace,
    filtration: Filtration,
    p_jump: RationalLike,
    jump_law: Sequence[tuple[RationalLike, RationalLike]],
) -> tuple[ProcessPath, ProcessPath]:
    """Cumulative-jump process on a matching jump tree, plus its closed-form compensator.

    Per step a jump of random size occurs with probability p_jump; the
    returned companion is the deterministic path B_k = k * p_jump * E[jump],
    exact because all parameters are rational.
    """
    if rat(p_jump) == 0:
        # nothing ever jumps, so any product tree carries the zero process
        _tree_arity(space, filtration)
        zero = ProcessPath.constant(filtration, 0)
        return zero, zero
    branches = _jump_branches(p_jump, jump_law)
    depth = len(filtration) - 1
    m = _tree_arity(space, filtration)
    if m != len(branches):
        raise PreconditionError(
            f"space branches {m} ways per step, jump law needs {len(branches)}"
        )
    # bind branches to the space's own step alphabet, in branch order:
    # outcome j * m^(depth-1) is the first whose leading symbol is branch j
    alphabet = [space.outcomes[j * m ** (depth - 1)][0] for j in range(m)]
    if len(set(alphabet)) != m:
        raise PreconditionError("space outcomes do not form a product tree over one alphabet")
    by_symbol = {alphabet[j]: (branches[j][1], branches[j][2]) for j in range(m)}
    for i, label in enumerate(space.outcomes):
        expect_p = Fraction(1)
        for ch in label:
            if ch not in by_symbol:
                raise PreconditionError(f"outcome {label!r} uses symbol {ch!r} outside the alphabet")
            expect_p *= by_symbol[ch][0]
        if space.probs[i] != expect_p:
            raise PreconditionError(
                f"outcome {label!r} has probability {space.probs[i]}, law implies {expect_p}"
            )
    step_mean = sum((q * v for _, q, v in branches), ZERO)
    rows: list[list[Fraction]] = [[ZERO] * space.size]
    for k in range(1, depth + 1):
        rows.append(
            [rows[k - 1][i] + by_symbol[label[k - 1]][1] for i, label in enumerate(space.outcomes)]
        )
    jumps = ProcessPath(filtration, rows)
    compensator = ProcessPath(
        filtration, [[k * step_mean] * space.size for k in range(depth + 1)]
    )
    return jumps, compensator


@dataclass(frozen=True)
class RandomizedInstance:
    """A seeded bundle of verified objects for property tests."""

    space: SampleSpace
    filtration: Filtration
    increasing: ProcessPath
    martingale: ProcessPath
    predictable: ProcessPath
    stopping_time: StoppingTime
    jump_value: RandomVariable


def _shuffled(rng: XorShift64, items: Sequence[int]) -> list[int]:
    out = list(items)
    for j in range(len(out) - 1, 0, -1):
        k = rng.below(j + 1)
        out[j], out[k] = out[k], out[j]
    return out


def _random_refining_chain(rng: XorShift64, n_outcomes: int, steps: int) -> list[Partition]:
    """Trivial partition at time 0, then random refinements ending who-knows-where."""
    parts = [Partition.trivial(n_outcomes)]
    current = [list(range(n_outcomes))]
    for _ in range(steps):
        nxt: list[list[int]] = []
        for block in current:
            if len(block) > 1 and rng.below(3) > 0:
                cut = 1 + rng.below(len(block) - 1)
                picked = _shuffled(rng, block)
                nxt.extend([sorted(picked[:cut]), sorted(picked[cut:])])
            else:
                nxt.append(block)
        current = nxt
        parts.append(Partition(current, n_outcomes))
    return parts


def _random_adapted_rows(
    rng: XorShift64, filtration: Filtration, nonnegative_increments: bool
) -> list[list[Fraction]]:
    n = filtration.space.size
    start = ZERO if nonnegative_increments else rng.rational()
    rows = [[start] * n]
    for k in range(1, len(filtration)):
        part = filtration.partitions[k]
        row = [ZERO] * n
        for block in part.blocks:
            delta = (
                rng.positive_rational() if nonnegative_increments else rng.rational()
            )
            if nonnegative_increments and rng.below(4) == 0:
                delta = ZERO
            for i in block:
                row[i] = rows[k - 1][i] + delta
        rows.append(row)
    return rows


def randomized_instance(
    seed: int, max_outcomes: int = 64, max_steps: int = 8
) -> RandomizedInstance:
    """Deterministic function of the seed; every emitted object passes its verifier."""
    if not 2 <= max_outcomes <= 64:
        raise PreconditionError(f"max_outcomes {max_outcomes} out of range 2..64")
    if not 1 <= max_steps <= 8:
        raise PreconditionError(f"max_steps {max_steps} out of range 1..8")
    rng = XorShift64(seed)
    n = 2 + rng.below(max_outcomes - 1)
    steps = 1 + rng.below(max_steps)
    weights = [Fraction(1 + rng.below(9)) for _ in range(n)]
    total = sum(weights, ZERO)
    space = SampleSpace([f"w{i}" for i in range(n)], [w / total for w in weights])
    partitions = _random_refining_chain(rng, n, steps)
    times = [Fraction(k) for k in range(steps + 1)]
    filtration = Filtration(space, times, partitions)

    increasing = ProcessPath(filtration, _random_adapted_rows(rng, filtration, True))

    # martingale: compensate the increments of a random adapted path
    raw = ProcessPath(filtration, _random_adapted_rows(rng, filtration, False))
    m_rows: list[list[Fraction]] = [[rng.rational()] * n]
    for k in range(1, len(filtration)):
        drift = conditional_expectation(raw.increment(k), filtration.partitions[k - 1])
        row = [
            m_rows[k - 1][i] + raw.values[k][i] - raw.values[k - 1][i] - drift.values[i]
            for i in range(n)
        ]
        m_rows.append(row)
    martingale = ProcessPath(filtration, m_rows)

    p_rows: list[list[Fraction]] = [[rng.rational()] * n]
    for k in range(1, len(filtration)):
        part = filtration.partitions[k - 1]
        row = [ZERO] * n
        for block in part.blocks:
            v = rng.rational()
            for i in block:
                row[i] = v
        p_rows.append(row)
    predictable = ProcessPath(filtration, p_rows)

    # first time the increasing path crosses a random positive level, NEVER if it does not
    level = rng.positive_rational(max_numer=6, max_denom=2)
    stop: list[int | float] = []
    for i in range(n):
        hit: int | float = NEVER
        for k in range(1, len(filtration)):
            if increasing.values[k][i] >= level:
                hit = k
                break
        stop.append(hit)
    stopping_time = StoppingTime(filtration, stop)

    jump_value = _measurable_at(stopping_time, increasing)
    return RandomizedInstance(
        space, filtration, increasing, martingale, predictable, stopping_time, jump_value
    )


def _measurable_at(t: StoppingTime, a: ProcessPath) -> RandomVariable:
    """A nonnegative variable measurable at the stopping time: the path value there."""
    space = a.space
    last = a.last_index
    vals = []
    for i in range(space.size):
        k = t.stop_index[i]
        vals.append(a.values[last if k == NEVER else k][i])
    return RandomVariable(space, vals)


@dataclass(frozen=True)
class DyadicWalkModel:
    """A walk-driven model on a fine dyadic time grid.

    Branching happens only at the level-``branch_level`` grid times; between
    branch times the filtration and all bundled paths are constant, so the
    fine grid carries exact skeletons of step processes.
    """

    space: SampleSpace
    filtration: Filtration
    walk: ProcessPath
    up_counter: ProcessPath
    single_jump: ProcessPath
    jump_time: StoppingTime
    jump_time_capped: StoppingTime
    jump_size: RandomVariable


def dyadic_walk_model(
    grid_level: int, branch_level: int, p_up: RationalLike = Fraction(1, 2), horizon: int = 1
) -> DyadicWalkModel:
    """Build the bundled fine-grid fixture used by the convergence pipelines.

    The walk is the compensated +-walk with branch steps at times j*2^-branch_level;
    the up-counter counts its up-steps; the single jump pays 1 at the first
    down-step (never, on the all-up path).
    """
    if not 0 <= branch_level <= grid_level:
        raise PreconditionError(
            f"branch_level {branch_level} must lie in 0..grid_level={grid_level}"
        )
    if horizon < 1:
        raise PreconditionError("horizon must be a positive integer")
    depth = horizon * 2**branch_level
    if depth > 12:
        raise PreconditionError(f"{depth} branch steps is beyond desk scale (max 12)")
    p = rat(p_up)
    if not 0 < p < 1:
        raise PreconditionError(f"p_up must be strictly between 0 and 1, got {p}")

    n_fine = horizon * 2**grid_level
    times = [Fraction(k, 2**grid_level) for k in range(n_fine + 1)]
    tree_space, tree_filtration = _product_tree(
        depth, ("u", "d"), (p, 1 - p), [Fraction(k) for k in range(depth + 1)]
    )
    stride = 2 ** (grid_level - branch_level)
    coins_by_fine = [k // stride for k in range(n_fine + 1)]
    partitions = [tree_filtration.partitions[c] for c in coins_by_fine]
    filtration = Filtration(tree_space, times, partitions)

    up = 1 - p
    down = -p
    walk_rows: list[list[Fraction]] = []
    counter_rows: list[list[Fraction]] = []
    for k in range(n_fine + 1):
        coins = coins_by_fine[k]
        wrow = []
        crow = []
        for label in tree_space.outcomes:
            prefix = label[:coins]
            ups = prefix.count("u")
            downs = coins - ups
            wrow.append(ups * up + downs * down)
            crow.append(Fraction(ups))
        walk_rows.append(wrow)
        counter_rows.append(crow)
    walk = ProcessPath(filtration, walk_rows)
    up_counter = ProcessPath(filtration, counter_rows)

    stop: list[int | float] = []
    for label in tree_space.outcomes:
        first_down = label.find("d")
        stop.append(NEVER if first_down < 0 else (first_down + 1) * stride)
    jump_time = StoppingTime(filtration, stop)
    capped = StoppingTime(
        filtration, [min(s, n_fine) if s != NEVER else n_fine for s in stop]
    )
    jump_size = RandomVariable.constant(tree_space, 1)
    jump_rows = [
        [
            (1 if jump_time.stop_index[i] <= k else 0)
            for i in range(tree_space.size)
        ]
        for k in range(n_fine + 1)
    ]
    single_jump = ProcessPath(filtration, jump_rows)
    return DyadicWalkModel(
        tree_space,
        filtration,
        walk,
        up_counter,
        single_jump,
        jump_time,
        capped,
        jump_size,
    )
