"""Exact finite probability.

Sample spaces carry arbitrary-precision rational probabilities, partitions
play the role of finite sigma-algebras (represented by their atoms), and a
filtration is a refining chain of partitions with rational time stamps.
Every operation here is exact: probabilities, expectations and conditional
expectations are computed in rational arithmetic with zero tolerance, so
that linear identities downstream can be asserted with ``==``.

Floats are rejected at construction time.  A float that sneaks into a
probability or a random-variable value would silently turn exact identity
checks into approximate ones, which defeats the point of the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import ConstructionError, PreconditionError, SelfCheckError

RationalLike = Union[int, str, Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)


def rat(x: RationalLike) -> Fraction:
    """Coerce ``x`` to an exact Fraction; floats are refused."""
    if isinstance(x, float):
        raise ConstructionError(f"floats are not exact; got {x!r}")
    if isinstance(x, bool):
        raise ConstructionError(f"booleans are not numbers; got {x!r}")
    return Fraction(x)


@dataclass(frozen=True)
class SampleSpace:
    """A finite outcome set with strictly positive rational probabilities."""

    outcomes: tuple[str, ...]
    probs: tuple[Fraction, ...]

    def __init__(self, outcomes: Sequence[str], probs: Sequence[RationalLike]):
        outcomes = tuple(str(o) for o in outcomes)
        p = tuple(rat(q) for q in probs)
        if len(outcomes) != len(p):
            raise ConstructionError(
                f"{len(outcomes)} outcomes but {len(p)} probabilities"
            )
        if not outcomes:
            raise ConstructionError("a sample space needs at least one outcome")
        if len(set(outcomes)) != len(outcomes):
            raise ConstructionError("outcome labels must be pairwise distinct")
        for label, q in zip(outcomes, p):
            if q <= 0:
                raise ConstructionError(f"prob of {label!r} is {q}, must be > 0")
        total = sum(p, ZERO)
        if total != 1:
            raise ConstructionError(f"probabilities sum to {total}, expected 1")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "probs", p)

    @property
    def size(self) -> int:
        return len(self.outcomes)

    def prob_of(self, indices: Iterable[int]) -> Fraction:
        """Probability of the event given by outcome indices."""
        return sum((self.probs[i] for i in indices), ZERO)

    @classmethod
    def uniform(cls, outcomes: Sequence[str]) -> "SampleSpace":
        n = len(outcomes)
        return cls(outcomes, [Fraction(1, n)] * n)


@dataclass(frozen=True)
class Partition:
    """A partition of outcome indices; the atoms of a finite sigma-algebra.

    Blocks are stored in canonical form: each block sorted ascending, blocks
    ordered by their smallest element.  Equality and iteration order are
    therefore deterministic.
    """

    blocks: tuple[tuple[int, ...], ...]
    size: int

    def __init__(self, blocks: Iterable[Iterable[int]], size: int):
        canon = tuple(sorted(tuple(sorted(set(b))) for b in blocks))
        seen: set[int] = set()
        for block in canon:
            if not block:
                raise ConstructionError("partition blocks must be nonempty")
            for i in block:
                if not 0 <= i < size:
                    raise ConstructionError(f"outcome index {i} out of range 0..{size - 1}")
                if i in seen:
                    raise ConstructionError(f"outcome index {i} appears in two blocks")
                seen.add(i)
        if len(seen) != size:
            missing = sorted(set(range(size)) - seen)
            raise ConstructionError(f"blocks do not cover outcome indices {missing}")
        object.__setattr__(self, "blocks", canon)
        object.__setattr__(self, "size", size)

    @classmethod
    def trivial(cls, size: int) -> "Partition":
        return cls([range(size)], size)

    @classmethod
    def singletons(cls, size: int) -> "Partition":
        return cls([[i] for i in range(size)], size)

    def block_index_of(self) -> tuple[int, ...]:
        """Map outcome index -> index of its block."""
        owner = [0] * self.size
        for b, block in enumerate(self.blocks):
            for i in block:
                owner[i] = b
        return tuple(owner)

    def refines(self, coarser: "Partition") -> bool:
        """True iff every block of self sits inside one block of ``coarser``."""
        if self.size != coarser.size:
            return False
        owner = coarser.block_index_of()
        return all(len({owner[i] for i in block}) == 1 for block in self.blocks)


@dataclass(frozen=True)
class Filtration:
    """A refining chain of partitions, one per strictly increasing time stamp."""

    space: SampleSpace
    times: tuple[Fraction, ...]
    partitions: tuple[Partition, ...]

    def __init__(
        self,
        space: SampleSpace,
        times: Sequence[RationalLike],
        partitions: Sequence[Partition],
    ):
        ts = tuple(rat(t) for t in times)
        parts = tuple(partitions)
        if len(ts) != len(parts):
            raise ConstructionError(f"{len(ts)} times but {len(parts)} partitions")
        if not ts:
            raise ConstructionError("a filtration needs at least one time")
        if ts[0] != 0:
            raise ConstructionError(f"times must start at 0, got {ts[0]}")
        for a, b in zip(ts, ts[1:]):
            if not a < b:
                raise ConstructionError(f"times must be strictly increasing: {a} !< {b}")
        for k, part in enumerate(parts):
            if part.size != space.size:
                raise ConstructionError(
                    f"partition at step {k} is over {part.size} outcomes, space has {space.size}"
                )
        for k in range(len(parts) - 1):
            if not parts[k + 1].refines(parts[k]):
                raise ConstructionError(f"partition at step {k + 1} does not refine step {k}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "times", ts)
        object.__setattr__(self, "partitions", parts)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def last_index(self) -> int:
        return len(self.times) - 1


@dataclass(frozen=True)
class RandomVariable:
    """One exact rational value per outcome of a sample space.

    Supports pointwise arithmetic so that identities like
    ``l2_norm_sq(x - y)`` read the way the math is usually written.
    """

    space: SampleSpace
    values: tuple[Fraction, ...]

    def __init__(self, space: SampleSpace, values: Sequence[RationalLike]):
        vals = tuple(rat(v) for v in values)
        if len(vals) != space.size:
            raise ConstructionError(
                f"{len(vals)} values for a space of {space.size} outcomes"
            )
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, space: SampleSpace, c: RationalLike) -> "RandomVariable":
        return cls(space, [rat(c)] * space.size)

    @classmethod
    def indicator(cls, space: SampleSpace, indices: Iterable[int]) -> "RandomVariable":
        inside = set(indices)
        return cls(space, [ONE if i in inside else ZERO for i in range(space.size)])

    def _same_space(self, other: "RandomVariable") -> None:
        if self.space is not other.space and self.space != other.space:
            raise PreconditionError("random variables live on different sample spaces")

    def __add__(self, other: "RandomVariable") -> "RandomVariable":
        self._same_space(other)
        return RandomVariable(self.space, [a + b for a, b in zip(self.values, other.values)])

    def __sub__(self, other: "RandomVariable") -> "RandomVariable":
        self._same_space(other)
        return RandomVariable(self.space, [a - b for a, b in zip(self.values, other.values)])

    def __mul__(self, other: "RandomVariable | RationalLike") -> "RandomVariable":
        if isinstance(other, RandomVariable):
            self._same_space(other)
            return RandomVariable(
                self.space, [a * b for a, b in zip(self.values, other.values)]
            )
        c = rat(other)
        return RandomVariable(self.space, [a * c for a in self.values])

    __rmul__ = __mul__

    def __neg__(self) -> "RandomVariable":
        return RandomVariable(self.space, [-a for a in self.values])

    def max_abs(self) -> Fraction:
        return max(abs(v) for v in self.values)


def expectation(x: RandomVariable) -> Fraction:
    """Exact expectation: the probability-weighted sum of values."""
    return sum((p * v for p, v in zip(x.space.probs, x.values)), ZERO)


def conditional_expectation(x: RandomVariable, g: Partition) -> RandomVariable:
    """Project ``x`` onto the sigma-algebra generated by ``g``.

    On each block the result is the probability-weighted block average,
    so the output is constant on blocks and exact.
    """
    if g.size != x.space.size:
        raise PreconditionError(
            f"partition over {g.size} outcomes is incompatible with a space of {x.space.size}"
        )
    out: list[Fraction] = [ZERO] * x.space.size
    probs = x.space.probs
    for block in g.blocks:
        mass = sum((probs[i] for i in block), ZERO)
        if mass == 0:
            # unreachable: block probabilities are strictly positive by invariant
            raise SelfCheckError("empty-mass block in conditional expectation")
        avg = sum((probs[i] * x.values[i] for i in block), ZERO) / mass
        for i in block:
            out[i] = avg
    return RandomVariable(x.space, out)


def is_measurable(x: RandomVariable, g: Partition) -> bool:
    """True iff ``x`` is constant on every block of ``g`` (exact equality)."""
    if g.size != x.space.size:
        raise PreconditionError(
            f"partition over {g.size} outcomes is incompatible with a space of {x.space.size}"
        )
    for block in g.blocks:
        v0 = x.values[block[0]]
        if any(x.values[i] != v0 for i in block[1:]):
            return False
    return True


def l2_inner(x: RandomVariable, y: RandomVariable) -> Fraction:
    """Exact E[xy]."""
    x._same_space(y)
    return sum(
        (p * a * b for p, a, b in zip(x.space.probs, x.values, y.values)), ZERO
    )


def l2_norm_sq(x: RandomVariable) -> Fraction:
    """Exact E[x^2]."""
    return l2_inner(x, x)
