"""Forward convex recombination of L2-bounded sequences.

Given variables X_0, X_1, ... the goal is a sequence Y_n, each a convex
combination of a forward window {X_n, X_{n+1}, ...}, that is Cauchy in L2.
The workhorse is minimization of E[Z^2] = w^T G w over the probability
simplex, with Gram matrix G_ij = E[X_i X_j].

Solver layout:

* a deterministic Frank-Wolfe loop in floating point (start at the first
  vertex, exact line search on the quadratic, lowest-index tie-breaking,
  duality-gap stopping rule) finds the near-optimal face cheaply;
* an exact active-set polish over rationals then solves the KKT system on
  the working support, dropping negative coordinates and admitting
  violating vertices until the rational duality gap is exactly zero.

Floating point never leaves the solver: returned weights are rationals on
the exact simplex, so every downstream identity can be checked with zero
tolerance.  The certificate records the attained tail minima alpha_n
(computed over the full remaining tail, which makes them nondecreasing)
and, per consecutive pair, the Cauchy estimate

    E[(Y_n - Y_m)^2] <= 2(eps_n + eps_m) + 2(alpha_m - alpha_n)

where eps_n is the slack of the windowed attained value over alpha_n.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ConstructionError, PreconditionError, SelfCheckError
from .prob import RandomVariable, ZERO, l2_inner, l2_norm_sq

GAP_TOL = 1e-10
ITERATION_CAP = 100_000
ALPHA_MONOTONE_TOL = 1e-9


@dataclass(frozen=True)
class ConvexWeights:
    """Nonnegative weights summing to one, applied from ``start_index`` onward.

    Weights are stored as exact rationals on the simplex regardless of how
    they were found; ``exact`` records whether they came straight from the
    rational solver or from rationalized floating-point iterates.
    """

    start_index: int
    weights: tuple[Fraction, ...]
    exact: bool = False

    def __post_init__(self):
        if self.start_index < 0:
            raise ConstructionError("start index must be nonnegative")
        if not self.weights:
            raise ConstructionError("weights must be nonempty")
        if any(w < 0 for w in self.weights):
            raise ConstructionError("weights must be nonnegative")
        total = sum(self.weights, ZERO)
        if total != 1:
            raise ConstructionError(f"weights sum to {total}, expected exactly 1")

    @property
    def floats(self) -> tuple[float, ...]:
        return tuple(float(w) for w in self.weights)

    def combine(self, sequence: Sequence[RandomVariable]) -> RandomVariable:
        """The convex combination sum_i weights[i] * sequence[start_index + i]."""
        if self.start_index + len(self.weights) > len(sequence):
            raise PreconditionError("weights extend past the end of the sequence")
        acc = RandomVariable.constant(sequence[0].space, 0)
        for i, w in enumerate(self.weights):
            acc = acc + sequence[self.start_index + i] * w
        return acc


@dataclass(frozen=True)
class PairwiseBound:
    """One audited instance of the Cauchy estimate between Y_n and Y_m."""

    n: int
    m: int
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class MazurCertificate:
    """Attained tail minima and the pairwise Cauchy audit."""

    alpha_sequence: tuple[float, ...]
    pairwise_bound_checks: tuple[PairwiseBound, ...]

    def __post_init__(self):
        for a, b in zip(self.alpha_sequence, self.alpha_sequence[1:]):
            if a > b + ALPHA_MONOTONE_TOL:
                raise ConstructionError(
                    f"tail minima must be nondecreasing: {a} > {b} beyond tolerance"
                )

    @property
    def all_bounds_hold(self) -> bool:
        return all(p.holds for p in self.pairwise_bound_checks)


@dataclass(frozen=True)
class SimplexQPResult:
    weights: tuple[Fraction, ...]
    value: Fraction
    gap: Fraction
    iterations: int
    refined: bool


def gram_matrix(sequence: Sequence[RandomVariable]) -> list[list[Fraction]]:
    """Exact Gram matrix of second moments, G_ij = E[X_i X_j]."""
    space = sequence[0].space
    for x in sequence[1:]:
        if x.space != space:
            raise PreconditionError("sequence members live on different sample spaces")
    n = len(sequence)
    g = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            v = l2_inner(sequence[i], sequence[j])
            g[i][j] = v
            g[j][i] = v
    return g


def _solve_linear(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Exact Gaussian elimination; free variables are pinned to zero.

    Returns any solution of a x = b, or None when the system is inconsistent.
    """
    m = len(a)
    n = len(a[0]) if m else 0
    rows = [list(r) + [bv] for r, bv in zip(a, b)]
    pivot_cols: list[int] = []
    r = 0
    for c in range(n):
        pivot = next((i for i in range(r, m) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][c]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(m):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [v - f * w for v, w in zip(rows[i], rows[r])]
        pivot_cols.append(c)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if rows[i][n] != 0:
            return None
    x = [ZERO] * n
    for i, c in enumerate(pivot_cols):
        x[c] = rows[i][n]
    for i in range(m):
        if sum((av * xv for av, xv in zip(a[i], x)), ZERO) != b[i]:
            return None
    return x


def _kkt_on_support(g: list[list[Fraction]], support: Sequence[int]) -> list[Fraction] | None:
    """Stationary point of w^T G w on the affine slice {sum = 1, off-support = 0}.

    Solves [2 G_S  1; 1^T  0] (w, nu) = (0, 1) exactly; returns full-length
    weights (which may be negative) or None when no solution exists.
    """
    s = list(support)
    k = len(s)
    a: list[list[Fraction]] = []
    for i in s:
        a.append([2 * g[i][j] for j in s] + [Fraction(1)])
    a.append([Fraction(1)] * k + [ZERO])
    rhs = [ZERO] * k + [Fraction(1)]
    sol = _solve_linear(a, rhs)
    if sol is None:
        return None
    full = [ZERO] * len(g)
    for pos, i in enumerate(s):
        full[i] = sol[pos]
    return full


def _quad_value(g: list[list[Fraction]], w: Sequence[Fraction]) -> Fraction:
    gw = [sum((g[i][j] * w[j] for j in range(len(w))), ZERO) for i in range(len(w))]
    return sum((w[i] * gw[i] for i in range(len(w))), ZERO)


def _exact_gap(g: list[list[Fraction]], w: Sequence[Fraction]) -> Fraction:
    """Frank-Wolfe duality gap grad.w - min_i grad_i, in exact arithmetic."""
    grad = [
        2 * sum((g[i][j] * w[j] for j in range(len(w))), ZERO) for i in range(len(w))
    ]
    return sum((grad[i] * w[i] for i in range(len(w))), ZERO) - min(grad)


def _frank_wolfe(gf: list[list[float]], gap_tol: float, budget: int) -> tuple[list[float], int]:
    """Deterministic Frank-Wolfe from the first vertex with exact line search."""
    w = len(gf)
    lam = [0.0] * w
    lam[0] = 1.0
    glam = [gf[i][0] for i in range(w)]
    value = gf[0][0]
    iters = 0
    for iters in range(1, budget + 1):
        grad = [2.0 * v for v in glam]
        j = min(range(w), key=lambda i: (grad[i], i))
        gap = sum(gi * li for gi, li in zip(grad, lam)) - grad[j]
        if gap <= gap_tol:
            break
        slope = glam[j] - value
        curvature = gf[j][j] - 2.0 * glam[j] + value
        if curvature > 0.0:
            gamma = min(1.0, max(0.0, -slope / curvature))
        else:
            gamma = 1.0 if slope < 0.0 else 0.0
        if gamma == 0.0:
            break
        value += 2.0 * gamma * slope + gamma * gamma * curvature
        lam = [(1.0 - gamma) * v for v in lam]
        lam[j] += gamma
        glam = [(1.0 - gamma) * glam[i] + gamma * gf[i][j] for i in range(w)]
    return lam, iters


def _active_set(
    g: list[list[Fraction]], start_support: Sequence[int]
) -> tuple[list[Fraction], int] | None:
    """Exact active-set descent; returns (weights, kkt solves) at gap zero, or None."""
    w = len(g)
    support = sorted(set(start_support)) or [0]
    seen: set[tuple[int, ...]] = set()
    solves = 0
    while solves < 4 * w * w + 16:
        key = tuple(support)
        if key in seen:
            return None
        seen.add(key)
        sol = _kkt_on_support(g, support)
        solves += 1
        if sol is None:
            if len(support) == 1:
                return None
            support = support[:-1]
            continue
        negative = [i for i in support if sol[i] < 0]
        if negative:
            worst = min(negative, key=lambda i: (sol[i], i))
            support = [i for i in support if i != worst]
            if not support:
                return None
            continue
        grad = [2 * sum((g[i][j] * sol[j] for j in range(w)), ZERO) for i in range(w)]
        nu = min(grad[i] for i in support)
        j = min(range(w), key=lambda i: (grad[i], i))
        if grad[j] >= nu:
            return [v if v > 0 else ZERO for v in sol], solves
        support = sorted(support + [j])
    return None


def solve_simplex_qp(
    g: list[list[Fraction]],
    gap_tol: float = GAP_TOL,
    max_iter: int = ITERATION_CAP,
    exact: bool = False,
) -> SimplexQPResult:
    """Minimize w^T G w over the probability simplex.

    The returned weights are exact rationals on the simplex and the reported
    duality gap is computed in rational arithmetic, so ``gap == 0`` really
    certifies optimality.
    """
    w = len(g)
    if w == 0:
        raise PreconditionError("empty window")
    if w == 1:
        one = (Fraction(1),)
        return SimplexQPResult(one, g[0][0], ZERO, 0, True)

    if exact:
        polished = _active_set(g, [0])
        if polished is None:
            raise SelfCheckError("exact simplex solve failed to certify optimality")
        lam_exact, solves = polished
        gap = _exact_gap(g, lam_exact)
        if gap != 0:
            raise SelfCheckError(f"exact solve left a nonzero duality gap {gap}")
        return SimplexQPResult(
            tuple(lam_exact), _quad_value(g, lam_exact), gap, solves, True
        )

    gf = [[float(v) for v in row] for row in g]
    warm_budget = min(max_iter, 64 * w + 64)
    lam_f, iters = _frank_wolfe(gf, gap_tol, warm_budget)
    support = [i for i in range(w) if lam_f[i] > 1e-12]
    polished = _active_set(g, support)
    if polished is not None:
        lam_exact, solves = polished
        gap = _exact_gap(g, lam_exact)
        if gap != 0:
            raise SelfCheckError(f"polished solve left a nonzero duality gap {gap}")
        return SimplexQPResult(
            tuple(lam_exact), _quad_value(g, lam_exact), gap, iters + solves, True
        )
    # polish failed (rare): finish with plain Frank-Wolfe and rationalize
    if iters < max_iter:
        lam_f, more = _frank_wolfe(gf, gap_tol, max_iter)
        iters = more
    total = sum(Fraction(v) for v in lam_f)
    lam_exact = [Fraction(v) / total for v in lam_f]
    return SimplexQPResult(
        tuple(lam_exact), _quad_value(g, lam_exact), _exact_gap(g, lam_exact), iters, False
    )


def tail_min_l2(
    sequence: Sequence[RandomVariable],
    n: int,
    window: int,
    exact: bool = False,
) -> tuple[ConvexWeights, float]:
    """Minimize E[Z^2] over convex combinations of {X_n, ..., X_{n+window-1}}.

    Returns the minimizing weights and the attained value; the solve is
    certified to a zero rational duality gap (or raises).
    """
    if window < 1:
        raise PreconditionError("window must be at least 1")
    if n < 0 or n + window > len(sequence):
        raise PreconditionError(
            f"window {n}..{n + window - 1} does not fit a sequence of length {len(sequence)}"
        )
    g = gram_matrix(sequence[n : n + window])
    res = solve_simplex_qp(g, exact=exact)
    if float(res.gap) > GAP_TOL:
        raise SelfCheckError(f"simplex solve ended with duality gap {float(res.gap)}")
    return ConvexWeights(n, res.weights, exact=res.refined), float(res.value)


def _sub_gram(g: list[list[Fraction]], start: int, size: int) -> list[list[Fraction]]:
    return [row[start : start + size] for row in g[start : start + size]]


def windowed_recombination(
    sequence: Sequence[RandomVariable],
    window: int,
    exact: bool = False,
) -> tuple[list[ConvexWeights], MazurCertificate]:
    """Minimizing weights per forward window, plus the Cauchy certificate.

    Y_n is the minimizer over the window {X_n, ..., X_{n+window-1}}, the
    window truncating near the end of the sequence so Y exists for every n
    (the last Y is the last X itself).  alpha_n is the exact minimum over
    the whole remaining tail {X_n, ...}; minimizing over shrinking tails
    makes alpha nondecreasing, and the windowed slack
    eps_n = attained_n - alpha_n feeds the pairwise Cauchy estimate.  No
    minimum length is required here; see :func:`mazur_sequence` for the
    guarded entry point.
    """
    length = len(sequence)
    if length < 1:
        raise PreconditionError("empty sequence")
    if window < 1:
        raise PreconditionError("window must be at least 1")
    g = gram_matrix(sequence)

    weights: list[ConvexWeights] = []
    attained: list[Fraction] = []
    alphas: list[Fraction] = []
    for n in range(length):
        wn = min(window, length - n)
        res = solve_simplex_qp(_sub_gram(g, n, wn), exact=exact)
        weights.append(ConvexWeights(n, res.weights, exact=res.refined))
        attained.append(res.value)
        if wn == length - n:
            alphas.append(res.value)
        else:
            tail = solve_simplex_qp(_sub_gram(g, n, length - n), exact=exact)
            alphas.append(tail.value)

    combined = [cw.combine(sequence) for cw in weights]
    checks: list[PairwiseBound] = []
    for n in range(length - 1):
        m = n + 1
        diff = combined[n] - combined[m]
        lhs = l2_norm_sq(diff)
        # parallelogram bookkeeping must be exact on the rational weights
        para = (
            2 * l2_norm_sq(combined[n])
            + 2 * l2_norm_sq(combined[m])
            - l2_norm_sq(combined[n] + combined[m])
        )
        if para != lhs:
            raise SelfCheckError("parallelogram identity failed on exact weights")
        eps_n = attained[n] - alphas[n]
        eps_m = attained[m] - alphas[m]
        rhs = 2 * (eps_n + eps_m) + 2 * (alphas[m] - alphas[n])
        checks.append(PairwiseBound(n, m, float(lhs), float(rhs), lhs <= rhs))
    certificate = MazurCertificate(
        tuple(float(a) for a in alphas), tuple(checks)
    )
    return weights, certificate


def mazur_sequence(
    sequence: Sequence[RandomVariable],
    window: int,
    exact: bool = False,
    l2_cap: Fraction | int = Fraction(10**6),
) -> tuple[list[ConvexWeights], MazurCertificate]:
    """Build the recombined sequence Y_n and its Cauchy certificate.

    Requires at least window + 2 members (so the sequence genuinely extends
    past the first window) and a finite L2 cap as a sanity guard; the
    construction itself is :func:`windowed_recombination`.
    """
    length = len(sequence)
    if window < 1:
        raise PreconditionError("window must be at least 1")
    if length < window + 2:
        raise PreconditionError(
            f"sequence of length {length} is too short for window {window} (need window + 2)"
        )
    sup_sq = max(l2_norm_sq(x) for x in sequence)
    if sup_sq > l2_cap:
        raise PreconditionError(
            f"sequence exceeds the L2 cap: sup E[X^2] = {sup_sq} > {l2_cap}"
        )
    return windowed_recombination(sequence, window, exact=exact)
