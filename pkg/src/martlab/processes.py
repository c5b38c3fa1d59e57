"""Adapted processes, stopping times, and exact process verification.

A :class:`ProcessPath` is a time-indexed family of random variables on one
filtration, stored as a rational value matrix ``values[time][outcome]``.
Verifiers return a :class:`VerificationReport` whose ``worst_violation`` is
an exact rational: a report passes if and only if that number is zero, and
failures always carry a witness naming the first offending time step and
partition block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ConstructionError, PreconditionError
from .prob import (
    Filtration,
    RandomVariable,
    RationalLike,
    ZERO,
    conditional_expectation,
    expectation,
    is_measurable,
    rat,
)

#: Stopping-time value meaning "never stops".
NEVER = math.inf


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of an exact check: passed iff worst_violation == 0."""

    passed: bool
    worst_violation: Fraction
    witness: tuple[int, tuple[int, ...]] | None = None

    def __post_init__(self):
        if self.passed != (self.worst_violation == 0):
            raise ConstructionError(
                f"passed={self.passed} inconsistent with worst_violation={self.worst_violation}"
            )


def _report(worst: Fraction, witness=None) -> VerificationReport:
    return VerificationReport(worst == 0, worst, None if worst == 0 else witness)


@dataclass(frozen=True)
class ProcessPath:
    """Values of a process along a filtration: one rational per (time, outcome)."""

    filtration: Filtration
    values: tuple[tuple[Fraction, ...], ...]

    def __init__(self, filtration: Filtration, values: Sequence[Sequence[RationalLike]]):
        rows = tuple(tuple(rat(v) for v in row) for row in values)
        if len(rows) != len(filtration):
            raise ConstructionError(
                f"{len(rows)} value rows for a filtration of length {len(filtration)}"
            )
        n = filtration.space.size
        for k, row in enumerate(rows):
            if len(row) != n:
                raise ConstructionError(f"row {k} has {len(row)} values, space has {n} outcomes")
        object.__setattr__(self, "filtration", filtration)
        object.__setattr__(self, "values", rows)

    @property
    def space(self):
        return self.filtration.space

    @property
    def last_index(self) -> int:
        return len(self.values) - 1

    def at(self, k: int) -> RandomVariable:
        return RandomVariable(self.space, self.values[k])

    def increment(self, k: int) -> RandomVariable:
        """The step ``X_k - X_{k-1}`` for k >= 1."""
        if k < 1:
            raise PreconditionError("increments start at step 1")
        return self.at(k) - self.at(k - 1)

    @classmethod
    def constant(cls, filtration: Filtration, c: RationalLike) -> "ProcessPath":
        v = rat(c)
        n = filtration.space.size
        return cls(filtration, [[v] * n for _ in range(len(filtration))])

    @classmethod
    def from_rows(cls, filtration: Filtration, rows: Sequence[RandomVariable]) -> "ProcessPath":
        return cls(filtration, [r.values for r in rows])

    def _same_filtration(self, other: "ProcessPath") -> None:
        if self.filtration is not other.filtration and self.filtration != other.filtration:
            raise PreconditionError("process paths live on different filtrations")

    def __add__(self, other: "ProcessPath") -> "ProcessPath":
        self._same_filtration(other)
        return ProcessPath(
            self.filtration,
            [[a + b for a, b in zip(r, s)] for r, s in zip(self.values, other.values)],
        )

    def __sub__(self, other: "ProcessPath") -> "ProcessPath":
        self._same_filtration(other)
        return ProcessPath(
            self.filtration,
            [[a - b for a, b in zip(r, s)] for r, s in zip(self.values, other.values)],
        )

    def __mul__(self, other: "ProcessPath | RationalLike") -> "ProcessPath":
        if isinstance(other, ProcessPath):
            self._same_filtration(other)
            return ProcessPath(
                self.filtration,
                [[a * b for a, b in zip(r, s)] for r, s in zip(self.values, other.values)],
            )
        c = rat(other)
        return ProcessPath(self.filtration, [[c * a for a in r] for r in self.values])

    __rmul__ = __mul__

    def __neg__(self) -> "ProcessPath":
        return ProcessPath(self.filtration, [[-a for a in r] for r in self.values])

    def max_abs(self) -> Fraction:
        return max(abs(v) for row in self.values for v in row)


@dataclass(frozen=True)
class StoppingTime:
    """An outcome -> time-index-or-infinity map, measurable along the filtration.

    Infinity is carried explicitly as ``NEVER``; operations that need a
    finite horizon state that as a precondition instead of truncating.
    """

    filtration: Filtration
    stop_index: tuple["int | float", ...]

    def __init__(self, filtration: Filtration, stop_index: Sequence["int | float"]):
        idx = tuple(stop_index)
        if len(idx) != filtration.space.size:
            raise ConstructionError(
                f"{len(idx)} stop indices for a space of {filtration.space.size} outcomes"
            )
        last = filtration.last_index
        for i, s in enumerate(idx):
            if s == NEVER:
                continue
            if not isinstance(s, int) or not 0 <= s <= last:
                raise ConstructionError(
                    f"stop index {s!r} at outcome {i} not in 0..{last} or NEVER"
                )
        space = filtration.space
        for k, part in enumerate(filtration.partitions):
            hit = RandomVariable(
                space, [1 if idx[i] <= k else 0 for i in range(space.size)]
            )
            if not is_measurable(hit, part):
                raise ConstructionError(
                    f"{{stop <= {k}}} is not a union of blocks of the step-{k} partition"
                )
        object.__setattr__(self, "filtration", filtration)
        object.__setattr__(self, "stop_index", idx)

    @property
    def is_finite(self) -> bool:
        return all(s != NEVER for s in self.stop_index)

    @classmethod
    def constant(cls, filtration: Filtration, k: "int | float") -> "StoppingTime":
        return cls(filtration, [k] * filtration.space.size)


def is_adapted(x: ProcessPath) -> VerificationReport:
    """Check that row k is measurable for the step-k partition, for every k.

    The violation magnitude on a block is its value spread (max minus min),
    so the report is exact and zero precisely on adapted paths.
    """
    worst = ZERO
    witness = None
    for k, part in enumerate(x.filtration.partitions):
        row = x.values[k]
        for block in part.blocks:
            vals = [row[i] for i in block]
            spread = max(vals) - min(vals)
            if spread > 0 and witness is None:
                witness = (k, block)
            worst = max(worst, spread)
    return _report(worst, witness)


def is_predictable(x: ProcessPath) -> VerificationReport:
    """Row 0 must be deterministic and row k measurable for step k-1."""
    row0 = x.values[0]
    spread0 = max(row0) - min(row0)
    if spread0 > 0:
        return _report(spread0, (0, tuple(range(x.space.size))))
    for k in range(1, len(x.values)):
        part = x.filtration.partitions[k - 1]
        row = x.values[k]
        for block in part.blocks:
            vals = [row[i] for i in block]
            spread = max(vals) - min(vals)
            if spread > 0:
                return _report(spread, (k, block))
    return _report(ZERO)


def is_martingale(m: ProcessPath) -> VerificationReport:
    """Exact one-step martingale check: E[M_{k+1} | step k] == M_k for all k."""
    adapted = is_adapted(m)
    if not adapted.passed:
        raise PreconditionError(
            f"martingale check requires an adapted path; spread {adapted.worst_violation} "
            f"at witness {adapted.witness}"
        )
    worst = ZERO
    witness = None
    for k in range(len(m.values) - 1):
        part = m.filtration.partitions[k]
        predicted = conditional_expectation(m.at(k + 1), part)
        gap = predicted - m.at(k)
        for block in part.blocks:
            g = abs(gap.values[block[0]])
            if g > worst:
                worst = g
                witness = (k, block)
    return _report(worst, witness)


def total_variation(a: ProcessPath) -> ProcessPath:
    """Pathwise running sum of absolute increments, starting at zero."""
    n = a.space.size
    rows: list[list[Fraction]] = [[ZERO] * n]
    for k in range(1, len(a.values)):
        prev = rows[-1]
        rows.append(
            [prev[i] + abs(a.values[k][i] - a.values[k - 1][i]) for i in range(n)]
        )
    return ProcessPath(a.filtration, rows)


def stopped_process(x: ProcessPath, t: StoppingTime) -> ProcessPath:
    """Freeze each path at its stop index: value at k is X_{min(k, T)}."""
    if x.filtration != t.filtration:
        raise PreconditionError("stopping time belongs to a different filtration")
    n = x.space.size
    # min(k, NEVER) is k, so paths that never stop pass through unchanged
    rows = [
        [x.values[min(k, t.stop_index[i])][i] for i in range(n)]
        for k in range(len(x.values))
    ]
    return ProcessPath(x.filtration, rows)


def value_at(x: ProcessPath, t: StoppingTime) -> RandomVariable:
    """X_T; requires T finite everywhere."""
    if x.filtration != t.filtration:
        raise PreconditionError("stopping time belongs to a different filtration")
    if not t.is_finite:
        raise PreconditionError("stopping time is infinite on some outcome")
    return RandomVariable(
        x.space, [x.values[t.stop_index[i]][i] for i in range(x.space.size)]
    )


def optional_sampling_check(m: ProcessPath, t: StoppingTime) -> VerificationReport:
    """E[M_T] == E[M_0] and the stopped path is again a martingale, exactly."""
    mart = is_martingale(m)
    if not mart.passed:
        raise PreconditionError(
            f"optional sampling requires a martingale; violation {mart.worst_violation} "
            f"at witness {mart.witness}"
        )
    if not t.is_finite:
        raise PreconditionError("stopping time is infinite on some outcome")
    terminal_gap = abs(expectation(value_at(m, t)) - expectation(m.at(0)))
    stopped = is_martingale(stopped_process(m, t))
    worst = max(terminal_gap, stopped.worst_violation)
    return _report(worst, stopped.witness)
