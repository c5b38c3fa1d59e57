"""Quadratic variation, covariation, and the discrete stochastic integral.

Everything is pathwise and exact.  The square-completion identity
``M_k^2 - M_0^2 = N_k + [M]_k`` (with N twice the running integral of the
lagged path against the increments) is asserted on every call that builds
one of its sides, as are polarization, the integral's bracket rule, and
martingale preservation, so a silent arithmetic defect cannot propagate.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import PreconditionError, SelfCheckError
from .prob import ZERO
from .processes import (
    ProcessPath,
    VerificationReport,
    is_adapted,
    is_martingale,
    is_predictable,
)
from .compensator import discrete_compensator


def _require_adapted(x: ProcessPath, what: str) -> None:
    rep = is_adapted(x)
    if not rep.passed:
        raise PreconditionError(
            f"{what} needs an adapted path; spread {rep.worst_violation} at {rep.witness}"
        )


def quadratic_variation(m: ProcessPath) -> ProcessPath:
    """Running sum of squared increments; increasing, adapted, zero at time 0."""
    _require_adapted(m, "quadratic variation")
    n = m.space.size
    rows: list[list[Fraction]] = [[ZERO] * n]
    for k in range(1, len(m.values)):
        step = m.increment(k)
        rows.append([rows[k - 1][i] + step.values[i] ** 2 for i in range(n)])
    qv = ProcessPath(m.filtration, rows)
    for k in range(1, len(m.values)):
        jump = qv.increment(k)
        step = m.increment(k)
        if any(jump.values[i] != step.values[i] ** 2 for i in range(n)):
            raise SelfCheckError("bracket jump differs from squared increment")
    return qv


def n_process(m: ProcessPath) -> ProcessPath:
    """Twice the running sum of lagged-value-times-increment.

    Satisfies M_k^2 - M_0^2 = N_k + [M]_k pathwise (asserted), and is a
    martingale whenever M is (asserted in that case).
    """
    _require_adapted(m, "square-completion process")
    n = m.space.size
    rows: list[list[Fraction]] = [[ZERO] * n]
    for k in range(1, len(m.values)):
        step = m.increment(k)
        prev = m.values[k - 1]
        rows.append(
            [rows[k - 1][i] + 2 * prev[i] * step.values[i] for i in range(n)]
        )
    np = ProcessPath(m.filtration, rows)
    qv = quadratic_variation(m)
    for k in range(len(m.values)):
        for i in range(n):
            lhs = m.values[k][i] ** 2 - m.values[0][i] ** 2
            if lhs != np.values[k][i] + qv.values[k][i]:
                raise SelfCheckError("square completion identity failed")
    if is_martingale(m).passed and not is_martingale(np).passed:
        raise SelfCheckError("companion of a martingale failed the martingale check")
    return np


def covariation(x: ProcessPath, y: ProcessPath) -> ProcessPath:
    """Running sum of increment products; polarization is asserted."""
    x._same_filtration(y)
    _require_adapted(x, "covariation")
    _require_adapted(y, "covariation")
    n = x.space.size
    rows: list[list[Fraction]] = [[ZERO] * n]
    for k in range(1, len(x.values)):
        sx = x.increment(k)
        sy = y.increment(k)
        rows.append(
            [rows[k - 1][i] + sx.values[i] * sy.values[i] for i in range(n)]
        )
    cov = ProcessPath(x.filtration, rows)
    plus = quadratic_variation(x + y)
    minus = quadratic_variation(x - y)
    for k in range(len(x.values)):
        for i in range(n):
            if 4 * cov.values[k][i] != plus.values[k][i] - minus.values[k][i]:
                raise SelfCheckError("polarization identity failed")
    return cov


def lagged(x: ProcessPath) -> ProcessPath:
    """One-step lag: value at k is X_{k-1}, and X_0 at time 0.

    The lag of an adapted path is the canonical predictable integrand; its
    time-0 row is deterministic whenever X_0 is.
    """
    rows = [x.values[0]] + [x.values[k - 1] for k in range(1, len(x.values))]
    return ProcessPath(x.filtration, rows)


def _integral_rows(h: ProcessPath, x: ProcessPath) -> list[list[Fraction]]:
    n = x.space.size
    rows: list[list[Fraction]] = [[ZERO] * n]
    for k in range(1, len(x.values)):
        step = x.increment(k)
        rows.append(
            [rows[k - 1][i] + h.values[k][i] * step.values[i] for i in range(n)]
        )
    return rows


def stochastic_integral(h: ProcessPath, x: ProcessPath) -> ProcessPath:
    """Running sum of H_k (X_k - X_{k-1}) for a predictable integrand.

    Preserves the martingale property of X (asserted when X is one) and has
    bracket sum H_k^2 (dX_k)^2 (asserted).
    """
    h._same_filtration(x)
    pred = is_predictable(h)
    if not pred.passed:
        raise PreconditionError(
            f"integrand is not predictable: spread {pred.worst_violation} at {pred.witness}"
        )
    _require_adapted(x, "stochastic integral")
    out = ProcessPath(x.filtration, _integral_rows(h, x))
    bracket = quadratic_variation(out)
    n = x.space.size
    acc = [ZERO] * n
    for k in range(1, len(x.values)):
        step = x.increment(k)
        for i in range(n):
            acc[i] += (h.values[k][i] * step.values[i]) ** 2
            if bracket.values[k][i] != acc[i]:
                raise SelfCheckError("integral bracket rule failed")
    if is_martingale(x).passed and not is_martingale(out).passed:
        raise SelfCheckError("integral against a martingale failed the martingale check")
    return out


def integration_by_parts_check(x: ProcessPath, y: ProcessPath) -> VerificationReport:
    """X_k Y_k - X_0 Y_0 == (lag X against Y) + (lag Y against X) + [X, Y], exactly."""
    x._same_filtration(y)
    _require_adapted(x, "integration by parts")
    _require_adapted(y, "integration by parts")
    left = _integral_rows(lagged(x), y)
    right = _integral_rows(lagged(y), x)
    cov = covariation(x, y)
    worst = ZERO
    witness = None
    for k in range(len(x.values)):
        for i in range(x.space.size):
            lhs = x.values[k][i] * y.values[k][i] - x.values[0][i] * y.values[0][i]
            gap = abs(lhs - (left[k][i] + right[k][i] + cov.values[k][i]))
            if gap > worst:
                worst = gap
                witness = (k, (i,))
    return VerificationReport(worst == 0, worst, witness)


def decomposition_check(mb: ProcessPath, mi: ProcessPath) -> VerificationReport:
    """Certify the square decomposition of a sum of two martingales.

    With A = [Mb] + 2[Mb, Mi] + [Mi]: each of (Mb)^2 - [Mb], Mb Mi - [Mb, Mi],
    (Mi)^2 - [Mi] and (Mb + Mi)^2 - A must be a martingale, and A must equal
    the bracket of the sum.
    """
    mb._same_filtration(mi)
    for name, m in (("bounded part", mb), ("variation part", mi)):
        rep = is_martingale(m)
        if not rep.passed:
            raise PreconditionError(
                f"{name} is not a martingale: violation {rep.worst_violation} at {rep.witness}"
            )
    qb = quadratic_variation(mb)
    qi = quadratic_variation(mi)
    cross = covariation(mb, mi)
    total = qb + 2 * cross + qi
    m = mb + mi
    worst = ZERO
    witness = None
    for part, bracket in ((mb, qb), (mi, qi), (m, total)):
        rep = is_martingale(part * part - bracket)
        if rep.worst_violation > worst:
            worst = rep.worst_violation
            witness = rep.witness
    rep = is_martingale(mb * mi - cross)
    if rep.worst_violation > worst:
        worst = rep.worst_violation
        witness = rep.witness
    gap = (total - quadratic_variation(m)).max_abs()
    if gap > worst:
        worst = gap
        witness = None
    return VerificationReport(worst == 0, worst, witness if worst != 0 else None)


def predictable_quadratic_variation(m: ProcessPath) -> ProcessPath:
    """Compensator of the bracket: the predictable quadratic variation."""
    return discrete_compensator(quadratic_variation(m))
