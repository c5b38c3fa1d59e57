"""Discrete dual predictable projection.

The compensator of an adapted path A is the predictable path B with B_0 = 0
and increments E[A_k - A_{k-1} | step k-1], which makes A - B a martingale.
Because certification is the whole point of this package, every call to
:func:`discrete_compensator` re-verifies both facts exactly before
returning; a failure there is a defect signal, not an input error.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import PreconditionError, SelfCheckError
from .prob import RandomVariable, ZERO, conditional_expectation
from .processes import (
    NEVER,
    ProcessPath,
    StoppingTime,
    VerificationReport,
    is_adapted,
    is_martingale,
    is_predictable,
)


def discrete_compensator(a: ProcessPath) -> ProcessPath:
    """Running sum of one-step-ahead conditional expected increments.

    Returns B with B_0 = 0 and B_k = sum_{i<=k} E[dA_i | step i-1]; B is
    predictable and A - B is a martingale, both re-checked exactly here.
    """
    adapted = is_adapted(a)
    if not adapted.passed:
        raise PreconditionError(
            f"compensator needs an adapted path; spread {adapted.worst_violation} at {adapted.witness}"
        )
    n = a.space.size
    rows: list[list[Fraction]] = [[ZERO] * n]
    for k in range(1, len(a.values)):
        drift = conditional_expectation(a.increment(k), a.filtration.partitions[k - 1])
        rows.append([rows[k - 1][i] + drift.values[i] for i in range(n)])
    b = ProcessPath(a.filtration, rows)
    _self_check(a, b)
    return b


def _self_check(a: ProcessPath, b: ProcessPath) -> None:
    pred = is_predictable(b)
    if not pred.passed:
        raise SelfCheckError(
            f"compensator output is not predictable: spread {pred.worst_violation} at {pred.witness}"
        )
    mart = is_martingale(a - b)
    if not mart.passed:
        raise SelfCheckError(
            f"compensated path is not a martingale: violation {mart.worst_violation} at {mart.witness}"
        )


def single_jump_process(t: StoppingTime, size: RandomVariable) -> ProcessPath:
    """The increasing path that pays ``size`` from the stop time onward.

    Requires t >= 1 everywhere (infinity allowed) and a nonnegative payout
    that is measurable at the stop time: on {t = k} it may depend only on
    step-k information, and on {t = infinity} only on terminal information.
    """
    filtration = t.filtration
    if size.space != filtration.space:
        raise PreconditionError("jump size lives on a different sample space")
    if any(s == 0 for s in t.stop_index):
        raise PreconditionError("single jump needs a strictly positive stopping time")
    if any(v < 0 for v in size.values):
        raise PreconditionError("jump size must be nonnegative")
    _require_measurable_at(t, size)
    n = filtration.space.size
    rows = [
        [size.values[i] if t.stop_index[i] <= k else ZERO for i in range(n)]
        for k in range(len(filtration))
    ]
    return ProcessPath(filtration, rows)


def _require_measurable_at(t: StoppingTime, x: RandomVariable) -> None:
    """x restricted to {t = k} must be constant on step-k blocks, for every k."""
    filtration = t.filtration
    levels: dict[int | float, list[int]] = {}
    for i, s in enumerate(t.stop_index):
        levels.setdefault(s, []).append(i)
    for level, members in levels.items():
        k = filtration.last_index if level == NEVER else int(level)
        inside = set(members)
        for block in filtration.partitions[k].blocks:
            seen = [x.values[i] for i in block if i in inside]
            if seen and any(v != seen[0] for v in seen):
                raise PreconditionError(
                    f"jump size is not measurable at the stop time: on {{t = {level}}} "
                    f"it separates step-{k} block {block}"
                )


def compensator_uniqueness_check(
    a: ProcessPath, b1: ProcessPath, b2: ProcessPath
) -> VerificationReport:
    """Two predictable compensator candidates for the same path must coincide.

    Preconditions (verified, violations raise): both candidates start at 0,
    are predictable, and compensate ``a`` to a martingale.  The check itself
    is the inductive argument that a predictable martingale null at 0 is 0:
    each increment difference is its own conditional expectation, hence zero.
    """
    for name, b in (("first", b1), ("second", b2)):
        if any(v != 0 for v in b.values[0]):
            raise PreconditionError(f"{name} candidate does not start at 0")
        pred = is_predictable(b)
        if not pred.passed:
            raise PreconditionError(
                f"{name} candidate is not predictable: spread {pred.worst_violation} at {pred.witness}"
            )
        mart = is_martingale(a - b)
        if not mart.passed:
            raise PreconditionError(
                f"{name} candidate does not compensate the path: violation "
                f"{mart.worst_violation} at {mart.witness}"
            )
    worst = ZERO
    witness = None
    diff = b1 - b2
    for k in range(1, len(a.values)):
        part = a.filtration.partitions[k - 1]
        step = diff.increment(k)
        # predictable, so the increment equals its own step-(k-1) projection;
        # both candidates compensate a, so that projection is zero
        projected = conditional_expectation(step, part)
        if projected.values != step.values:
            raise SelfCheckError("predictable increment differs from its projection")
        for block in part.blocks:
            g = abs(step.values[block[0]])
            if g > worst:
                worst = g
                witness = (k, block)
    return VerificationReport(worst == 0, worst, witness if worst != 0 else None)


def jordan_parts(a: ProcessPath) -> tuple[ProcessPath, ProcessPath]:
    """Increasing paths (P, N) with A - A_0 = P - N and |dA| = dP + dN."""
    n = a.space.size
    pos: list[list[Fraction]] = [[ZERO] * n]
    neg: list[list[Fraction]] = [[ZERO] * n]
    for k in range(1, len(a.values)):
        step = a.increment(k)
        pos.append([pos[k - 1][i] + max(step.values[i], ZERO) for i in range(n)])
        neg.append([neg[k - 1][i] + max(-step.values[i], ZERO) for i in range(n)])
    return ProcessPath(a.filtration, pos), ProcessPath(a.filtration, neg)


def signed_compensator(a: ProcessPath) -> ProcessPath:
    """Compensator of a signed path via its increasing and decreasing parts.

    Agrees with :func:`discrete_compensator` by linearity; the agreement is
    asserted so the two routes keep each other honest.
    """
    pos, neg = jordan_parts(a)
    b = discrete_compensator(pos) - discrete_compensator(neg)
    direct = discrete_compensator(a)
    if b.values != direct.values:
        raise SelfCheckError("Jordan-split compensator disagrees with the direct formula")
    return b
