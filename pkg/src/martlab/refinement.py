"""Dyadic coarsening pipelines and cadlag step-function checkers.

"Continuous time" is modeled as the finest dyadic grid of a model: a
filtration whose times are k * 2^-n_max up to a rational horizon.  Coarse
skeletons live on subgrids k * 2^-n; lifting a coarse path back to the
fine grid uses right-constant interpolation (value held on [t_k, t_{k+1})).

The two pipelines rebuild a target object (compensator, quadratic
variation) from coarse approximations recombined with convex weights and
report exact per-level errors.  At the top level the approximation IS the
exact object, so the last table row must be exactly zero; across the last
levels errors must be nonincreasing.  Nothing asymptotic is claimed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import ConstructionError, PreconditionError, SelfCheckError
from .prob import (
    Filtration,
    RandomVariable,
    RationalLike,
    ZERO,
    expectation,
    l2_norm_sq,
    rat,
)
from .processes import (
    ProcessPath,
    StoppingTime,
    VerificationReport,
    is_adapted,
    is_martingale,
    value_at,
)
from .compensator import discrete_compensator
from .quadratic import n_process, quadratic_variation
from .mazur import ConvexWeights, MazurCertificate, windowed_recombination


# ---------------------------------------------------------------------------
# dyadic grids


@dataclass(frozen=True)
class DyadicGrid:
    """The time grid {k * 2^-level : 0 <= k <= horizon * 2^level}."""

    level: int
    horizon: Fraction

    def __post_init__(self):
        if self.level < 0:
            raise ConstructionError("grid level must be nonnegative")
        if self.horizon <= 0:
            raise ConstructionError("grid horizon must be positive")
        if (self.horizon * 2**self.level).denominator != 1:
            raise ConstructionError(
                f"horizon {self.horizon} is not a multiple of 2^-{self.level}"
            )

    @property
    def step(self) -> Fraction:
        return Fraction(1, 2**self.level)

    @property
    def count(self) -> int:
        return int(self.horizon * 2**self.level)

    def times(self) -> list[Fraction]:
        return [Fraction(k, 2**self.level) for k in range(self.count + 1)]

    def supports_level(self, n: int) -> bool:
        return 0 <= n <= self.level and (self.horizon * 2**n).denominator == 1

    @classmethod
    def of_filtration(cls, filtration: Filtration) -> "DyadicGrid":
        times = filtration.times
        if len(times) < 2:
            raise PreconditionError("grid needs at least two times")
        step = times[1] - times[0]
        if step.numerator != 1 or step.denominator & (step.denominator - 1):
            raise PreconditionError(f"time step {step} is not 2^-n for a natural n")
        level = step.denominator.bit_length() - 1
        for k, t in enumerate(times):
            if t != k * step:
                raise PreconditionError(f"time {t} at index {k} breaks the uniform grid")
        return cls(level, times[-1])


def coarsen(model: ProcessPath, n: int) -> ProcessPath:
    """Level-n skeleton of a fine-grid path: values and partitions subsampled."""
    grid = DyadicGrid.of_filtration(model.filtration)
    if not grid.supports_level(n):
        raise PreconditionError(f"level {n} is not a subgrid of level {grid.level}")
    stride = 2 ** (grid.level - n)
    picks = range(0, grid.count + 1, stride)
    coarse = Filtration(
        model.space,
        [model.filtration.times[k] for k in picks],
        [model.filtration.partitions[k] for k in picks],
    )
    return ProcessPath(coarse, [model.values[k] for k in picks])


def lift(coarse: ProcessPath, fine: Filtration) -> ProcessPath:
    """Right-constant interpolation of a coarse path onto a finer grid."""
    cg = DyadicGrid.of_filtration(coarse.filtration)
    fg = DyadicGrid.of_filtration(fine)
    if not (fg.supports_level(cg.level) and fg.horizon == cg.horizon):
        raise PreconditionError("coarse grid is not a subgrid of the fine one")
    stride = 2 ** (fg.level - cg.level)
    rows = [coarse.values[k // stride] for k in range(fg.count + 1)]
    return ProcessPath(fine, rows)


# ---------------------------------------------------------------------------
# convergence tables


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    sup_error: Fraction
    terminal_error: Fraction
    jump_error: Fraction | None = None


@dataclass(frozen=True)
class ConvergenceTable:
    """Per-level errors of a recombination pipeline against the exact target."""

    pipeline: str
    window: int
    levels: tuple[int, ...]
    rows: tuple[ConvergenceRow, ...]
    certificate: MazurCertificate
    notes: tuple[str, ...] = ()

    def _columns(self) -> list[list[Fraction]]:
        cols = [
            [r.sup_error for r in self.rows],
            [r.terminal_error for r in self.rows],
        ]
        if any(r.jump_error is not None for r in self.rows):
            cols.append([r.jump_error for r in self.rows])
        return cols

    @property
    def top_exact(self) -> bool:
        last = self.rows[-1]
        return (
            last.sup_error == 0
            and last.terminal_error == 0
            and (last.jump_error is None or last.jump_error == 0)
        )

    @property
    def nonincreasing_tail(self) -> bool:
        """Errors nonincreasing over the last three levels (or all, if fewer)."""
        ok = True
        for col in self._columns():
            tail = col[-3:]
            ok = ok and all(a >= b for a, b in zip(tail, tail[1:]))
        return ok

    @property
    def passed(self) -> bool:
        return self.top_exact and self.nonincreasing_tail


def _effective_window(window: int, length: int) -> tuple[int, list[str]]:
    if window < 1:
        raise PreconditionError("window must be at least 1")
    notes: list[str] = []
    eff = window
    if length < window + 2:
        eff = max(1, length - 2)
        notes.append(f"window clamped from {window} to {eff} for {length} levels")
    if eff == 1:
        notes.append("window 1 is degenerate: each combination is a single level")
    return eff, notes


def _combine_paths(weights: ConvexWeights, paths: Sequence[ProcessPath]) -> ProcessPath:
    acc = ProcessPath.constant(paths[0].filtration, 0)
    for i, w in enumerate(weights.weights):
        acc = acc + paths[weights.start_index + i] * w
    return acc


def _sup_distance(x: ProcessPath, y: ProcessPath) -> Fraction:
    return (x - y).max_abs()


def _terminal_distance(x: ProcessPath, y: ProcessPath) -> Fraction:
    d = x.at(x.last_index) - y.at(y.last_index)
    return d.max_abs()


def _require_increasing(a: ProcessPath) -> None:
    for k in range(1, len(a.values)):
        if any(v < 0 for v in a.increment(k).values):
            raise PreconditionError(f"path decreases at step {k}")


def _validated_levels(grid: DyadicGrid, levels: Sequence[int]) -> tuple[int, ...]:
    lv = tuple(levels)
    if not lv:
        raise PreconditionError("empty level range")
    if list(lv) != sorted(set(lv)):
        raise PreconditionError("levels must be strictly increasing")
    for n in lv:
        if not grid.supports_level(n):
            raise PreconditionError(f"level {n} is not a subgrid of level {grid.level}")
    if lv[-1] != grid.level:
        raise PreconditionError(
            f"level range must end at the model grid level {grid.level}, got {lv[-1]}"
        )
    return lv


def compensator_pipeline(
    a: ProcessPath, levels: Sequence[int], window: int, exact_mazur: bool = False
) -> ConvergenceTable:
    """Rebuild the fine-grid compensator from convexly recombined coarse ones.

    Per level i: coarsen, compensate, lift; the recombined candidate at
    position n mixes the lifted compensators over the window starting at n.
    Errors are sup-grid and terminal distances to the exact fine compensator.
    """
    rep = is_adapted(a)
    if not rep.passed:
        raise PreconditionError("pipeline input must be adapted")
    _require_increasing(a)
    grid = DyadicGrid.of_filtration(a.filtration)
    lv = _validated_levels(grid, levels)
    window, notes = _effective_window(window, len(lv))

    target = discrete_compensator(a)
    lifted: list[ProcessPath] = []
    terminals: list[RandomVariable] = []
    a_terminal = a.at(a.last_index)
    for n in lv:
        bn = discrete_compensator(coarsen(a, n))
        bl = lift(bn, a.filtration)
        lifted.append(bl)
        terminals.append(a_terminal - bl.at(bl.last_index))
    weights, certificate = windowed_recombination(terminals, window, exact=exact_mazur)
    rows = []
    for pos, n in enumerate(lv):
        candidate = _combine_paths(weights[pos], lifted)
        rows.append(
            ConvergenceRow(
                n, _sup_distance(candidate, target), _terminal_distance(candidate, target)
            )
        )
    return ConvergenceTable(
        "compensator", window, lv, tuple(rows), certificate, tuple(notes)
    )


def qv_pipeline(
    m: ProcessPath, levels: Sequence[int], window: int, exact_mazur: bool = False
) -> ConvergenceTable:
    """Rebuild the bracket of a bounded fine-grid martingale from coarse skeletons.

    Per level the square-completion companion of the coarse skeleton is
    computed and lifted; M^2 minus the recombination is compared to the
    exact bracket in sup norm, at the terminal time, and jump by jump.
    """
    rep = is_martingale(m)
    if not rep.passed:
        raise PreconditionError(
            f"pipeline input must be a martingale; violation {rep.worst_violation}"
        )
    if any(v != 0 for v in m.values[0]):
        raise PreconditionError("pipeline input must start at 0")
    grid = DyadicGrid.of_filtration(m.filtration)
    lv = _validated_levels(grid, levels)
    window, notes = _effective_window(window, len(lv))

    bound = m.max_abs()
    m_terminal_sq = l2_norm_sq(m.at(m.last_index))
    target = quadratic_variation(m)
    squared = m * m
    lifted: list[ProcessPath] = []
    terminals: list[RandomVariable] = []
    for n in lv:
        nn = n_process(coarsen(m, n))
        check = is_martingale(nn)
        if not check.passed:
            raise SelfCheckError(f"level-{n} companion failed the martingale check")
        term = nn.at(nn.last_index)
        if l2_norm_sq(term) > 4 * bound**2 * m_terminal_sq:
            raise SelfCheckError(f"level-{n} companion breaks the second-moment bound")
        lifted.append(lift(nn, m.filtration))
        terminals.append(term)
    weights, certificate = windowed_recombination(terminals, window, exact=exact_mazur)
    rows = []
    for pos, n in enumerate(lv):
        candidate = squared - _combine_paths(weights[pos], lifted)
        jump_gap = ZERO
        for k in range(1, len(m.values)):
            da = candidate.increment(k)
            dm = m.increment(k)
            for i in range(m.space.size):
                jump_gap = max(jump_gap, abs(da.values[i] - dm.values[i] ** 2))
        rows.append(
            ConvergenceRow(
                n,
                _sup_distance(candidate, target),
                _terminal_distance(candidate, target),
                jump_gap,
            )
        )
    return ConvergenceTable("qv", window, lv, tuple(rows), certificate, tuple(notes))


# ---------------------------------------------------------------------------
# discretized stopping times


@dataclass(frozen=True)
class StoppingTimeRow:
    level: int
    identity_gap: Fraction
    expectation_error: Fraction


def _ceil_div(num: int, den: int) -> int:
    return -((-num) // den)


def stopping_time_discretization_rows(
    a: ProcessPath, s: StoppingTime, levels: Sequence[int]
) -> list[StoppingTimeRow]:
    """Per level: compensator-at-stop identity gap and expectation error.

    The coarse compensator is evaluated at the stop two ways: summing over
    grid cells with indicators (value at the right endpoint of the cell
    containing the stop time), and by first rounding the stop time up to the
    coarse grid and reading the value there.  The two must agree exactly.
    """
    if not s.is_finite:
        raise PreconditionError("stopping time is infinite on some outcome")
    rep = is_adapted(a)
    if not rep.passed:
        raise PreconditionError("input must be adapted")
    _require_increasing(a)
    grid = DyadicGrid.of_filtration(a.filtration)
    lv = _validated_levels(grid, levels)
    size = a.space.size
    stop_times = [a.filtration.times[s.stop_index[i]] for i in range(size)]
    fine_b = discrete_compensator(a)
    target = expectation(value_at(fine_b, s))
    rows = []
    for n in lv:
        bn = discrete_compensator(coarsen(a, n))
        coarse_times = bn.filtration.times
        # route one: indicator sum over grid cells (t_k, t_{k+1}]
        at_stop = []
        for i in range(size):
            t = stop_times[i]
            v = ZERO
            for k in range(len(coarse_times) - 1):
                if coarse_times[k] < t <= coarse_times[k + 1]:
                    v = bn.values[k + 1][i]
            at_stop.append(v)
        # route two: round the stop time up to the coarse grid, then look up
        scale = 2**n
        rounded = StoppingTime(
            bn.filtration,
            [_ceil_div((t * scale).numerator, (t * scale).denominator) for t in stop_times],
        )
        via_rounding = value_at(bn, rounded)
        identity_gap = max(
            abs(u - v) for u, v in zip(at_stop, via_rounding.values)
        )
        level_expect = expectation(RandomVariable(a.space, at_stop))
        rows.append(StoppingTimeRow(n, identity_gap, abs(level_expect - target)))
    return rows


def limsup_at_stopping_time_check(
    a: ProcessPath, s: StoppingTime, levels: Sequence[int]
) -> VerificationReport:
    """Exact per-level stop identity plus top-level expectation agreement."""
    rows = stopping_time_discretization_rows(a, s, levels)
    worst = ZERO
    witness = None
    for pos, row in enumerate(rows):
        if row.identity_gap > worst:
            worst = row.identity_gap
            witness = (row.level, ())
    top = rows[-1].expectation_error
    if top > worst:
        worst = top
        witness = (rows[-1].level, ())
    return VerificationReport(worst == 0, worst, witness if worst != 0 else None)


# ---------------------------------------------------------------------------
# cadlag step functions


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant map on [0, infinity).

    Value is ``initial_value`` on [0, b_0) and ``values[i]`` on
    [b_i, b_{i+1}); the last value holds forever.
    """

    initial_value: Fraction
    breakpoints: tuple[Fraction, ...]
    values: tuple[Fraction, ...]

    def __init__(
        self,
        initial_value: RationalLike,
        breakpoints: Sequence[RationalLike] = (),
        values: Sequence[RationalLike] = (),
    ):
        init = rat(initial_value)
        bps = tuple(rat(b) for b in breakpoints)
        vals = tuple(rat(v) for v in values)
        if len(bps) != len(vals):
            raise ConstructionError(f"{len(bps)} breakpoints but {len(vals)} values")
        for b in bps:
            if b <= 0:
                raise ConstructionError("breakpoints must be strictly positive")
        for x, y in zip(bps, bps[1:]):
            if not x < y:
                raise ConstructionError("breakpoints must be strictly increasing")
        object.__setattr__(self, "initial_value", init)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    def value(self, t: RationalLike) -> Fraction:
        t = rat(t)
        if t < 0:
            raise PreconditionError("step functions live on [0, infinity)")
        out = self.initial_value
        for b, v in zip(self.breakpoints, self.values):
            if b <= t:
                out = v
            else:
                break
        return out

    def left_limit(self, t: RationalLike) -> Fraction:
        t = rat(t)
        if t <= 0:
            raise PreconditionError("left limits need t > 0")
        out = self.initial_value
        for b, v in zip(self.breakpoints, self.values):
            if b < t:
                out = v
            else:
                break
        return out

    def jump(self, t: RationalLike) -> Fraction:
        return self.value(t) - self.left_limit(t)

    def is_nonnegative(self) -> bool:
        return self.initial_value >= 0 and all(v >= 0 for v in self.values)

    def is_increasing(self) -> bool:
        run = (self.initial_value,) + self.values
        return all(a <= b for a, b in zip(run, run[1:]))

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls(0)


def step_sum(fs: Sequence[StepFunction]) -> StepFunction:
    """Pointwise sum over the merged breakpoint set, compressing flat segments."""
    bps = sorted({b for f in fs for b in f.breakpoints})
    init = sum((f.initial_value for f in fs), ZERO)
    out_b: list[Fraction] = []
    out_v: list[Fraction] = []
    prev = init
    for b in bps:
        v = sum((f.value(b) for f in fs), ZERO)
        if v != prev:
            out_b.append(b)
            out_v.append(v)
            prev = v
    return StepFunction(init, out_b, out_v)


def sup_abs_difference(
    f: StepFunction, g: StepFunction, horizon: RationalLike | None = None
) -> Fraction:
    """sup |f - g|, over [0, horizon] or the whole half-line, exactly."""
    probes: list[Fraction] = [ZERO]
    limit = None if horizon is None else rat(horizon)
    for b in sorted(set(f.breakpoints) | set(g.breakpoints)):
        if limit is None or b <= limit:
            probes.append(b)
    if limit is not None:
        probes.append(limit)
    return max(abs(f.value(t) - g.value(t)) for t in probes)


def sup_abs_left_difference(f: StepFunction, g: StepFunction) -> Fraction:
    """sup over t > 0 of |f(t-) - g(t-)|, exactly."""
    probes = sorted(set(f.breakpoints) | set(g.breakpoints))
    best = abs(f.initial_value - g.initial_value)
    for b in probes:
        best = max(best, abs(f.left_limit(b) - g.left_limit(b)))
    if probes:
        past = probes[-1] + 1
        best = max(best, abs(f.left_limit(past) - g.left_limit(past)))
    return best


def sup_abs_jump_difference(f: StepFunction, g: StepFunction) -> Fraction:
    """sup over t of |jump of f - jump of g|; jumps live only at breakpoints."""
    probes = sorted(set(f.breakpoints) | set(g.breakpoints))
    if not probes:
        return ZERO
    return max(abs(f.jump(b) - g.jump(b)) for b in probes)


def step_sum_convergence_check(
    fs: Sequence[StepFunction], horizon: RationalLike
) -> VerificationReport:
    """Partial sums of nonnegative increasing steps converge uniformly on [0, horizon].

    Computes u_n = sup over [0, horizon] of |partial_n - total| on the merged
    breakpoint set and certifies three exact facts: u is nonincreasing, the
    last u is zero, and each u_n equals the value of the tail sum at the
    horizon (increasing tails peak at the right endpoint).
    """
    h = rat(horizon)
    if h <= 0:
        raise PreconditionError("horizon must be positive")
    for j, f in enumerate(fs):
        if not f.is_nonnegative():
            raise PreconditionError(f"member {j} takes negative values")
        if not f.is_increasing():
            raise PreconditionError(f"member {j} is decreasing somewhere")
    total = step_sum(fs)
    worst = ZERO
    witness = None
    us: list[Fraction] = []
    for n in range(len(fs) + 1):
        partial = step_sum(fs[:n])
        u = sup_abs_difference(partial, total, h)
        tail = step_sum(fs[n:])
        tail_at_h = tail.value(h)
        gap = abs(u - tail_at_h)
        if gap > worst:
            worst = gap
            witness = (n, ())
        us.append(u)
    for n in range(len(us) - 1):
        overshoot = us[n + 1] - us[n]
        if overshoot > worst:
            worst = overshoot
            witness = (n + 1, ())
    if us[-1] > worst:
        worst = us[-1]
        witness = (len(us) - 1, ())
    return VerificationReport(worst == 0, worst, witness if worst != 0 else None)


def step_sum_tail_values(fs: Sequence[StepFunction], horizon: RationalLike) -> list[Fraction]:
    """The exact u_n table certified by :func:`step_sum_convergence_check`."""
    h = rat(horizon)
    total = step_sum(fs)
    return [sup_abs_difference(step_sum(fs[:n]), total, h) for n in range(len(fs) + 1)]


def uniform_jump_convergence_check(
    fs: Sequence[StepFunction], f: StepFunction
) -> VerificationReport:
    """Uniform convergence of values, left limits and jumps along the list.

    All three sup distances must be nonincreasing along ``fs`` and end at
    exactly zero.  Families whose jump location moves while values converge
    only pointwise fail here by design.
    """
    if not fs:
        raise PreconditionError("empty approximating family")
    sups = [sup_abs_difference(g, f) for g in fs]
    lefts = [sup_abs_left_difference(g, f) for g in fs]
    jumps = [sup_abs_jump_difference(g, f) for g in fs]
    worst = ZERO
    witness = None
    for series in (sups, lefts, jumps):
        for n in range(len(series) - 1):
            overshoot = series[n + 1] - series[n]
            if overshoot > worst:
                worst = overshoot
                witness = (n + 1, ())
        if series[-1] > worst:
            worst = series[-1]
            witness = (len(series) - 1, ())
    return VerificationReport(worst == 0, worst, witness if worst != 0 else None)


def tail_sup_fatou_check(xs: Sequence[RandomVariable], n: int) -> VerificationReport:
    """max of tail expectations never exceeds the expectation of the tail max."""
    if not xs:
        raise PreconditionError("empty sequence")
    if not 0 <= n < len(xs):
        raise PreconditionError(f"tail start {n} out of range 0..{len(xs) - 1}")
    tail = xs[n:]
    lhs = max(expectation(x) for x in tail)
    space = tail[0].space
    sup_values = [max(x.values[i] for x in tail) for i in range(space.size)]
    rhs = expectation(RandomVariable(space, sup_values))
    worst = max(ZERO, lhs - rhs)
    return VerificationReport(worst == 0, worst, None if worst == 0 else (n, ()))


def path_step_function(path: ProcessPath, outcome: int) -> StepFunction:
    """One outcome's trajectory as a right-continuous step function of time."""
    if not 0 <= outcome < path.space.size:
        raise PreconditionError(f"outcome index {outcome} out of range")
    init = path.values[0][outcome]
    bps: list[Fraction] = []
    vals: list[Fraction] = []
    prev = init
    for k in range(1, len(path.values)):
        v = path.values[k][outcome]
        if v != prev:
            bps.append(path.filtration.times[k])
            vals.append(v)
            prev = v
    return StepFunction(init, bps, vals)
