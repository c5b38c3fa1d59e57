"""Named check batteries run by the command-line verifier.

Each suite turns a loaded model into a deterministic, canonically ordered
list of :class:`CheckResult`.  Checks either pass with violation zero or
fail with the exact violation and a printable witness; precondition
problems surface as failed checks with a note rather than crashes, so one
bad process cannot hide the results for the others.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import MartlabError
from .prob import ZERO, expectation, l2_norm_sq
from .processes import (
    ProcessPath,
    VerificationReport,
    is_adapted,
    is_martingale,
    is_predictable,
    optional_sampling_check,
    stopped_process,
    total_variation,
)
from .compensator import compensator_uniqueness_check, discrete_compensator
from .quadratic import (
    integration_by_parts_check,
    lagged,
    n_process,
    quadratic_variation,
    stochastic_integral,
)
from .mazur import mazur_sequence
from .modelio import Model, NamedProcess
from .refinement import (
    path_step_function,
    step_sum_convergence_check,
    tail_sup_fatou_check,
    uniform_jump_convergence_check,
)

SUITE_NAMES = ("martingale", "compensator", "quadratic", "mazur", "appendix")


@dataclass(frozen=True)
class CheckResult:
    suite: str
    check: str
    passed: bool
    worst_violation: Fraction | None
    witness: str = ""
    note: str = ""


def _from_report(suite: str, check: str, rep: VerificationReport, note: str = "") -> CheckResult:
    witness = ""
    if rep.witness is not None:
        k, block = rep.witness
        witness = f"step {k}, block {list(block)}"
    return CheckResult(suite, check, rep.passed, rep.worst_violation, witness, note)


def _boolean(suite: str, check: str, ok: bool, gap: Fraction = ZERO, note: str = "") -> CheckResult:
    return CheckResult(suite, check, ok, gap if not ok else ZERO, "", note)


def _guarded(suite: str, check: str, fn) -> CheckResult:
    try:
        return fn()
    except MartlabError as exc:
        return CheckResult(suite, check, False, None, "", f"error: {exc}")


def _rows(p: ProcessPath):
    return [p.at(k) for k in range(len(p.values))]


def _suite_martingale(model: Model) -> list[CheckResult]:
    out = []
    finite_stops = [(n, t) for n, t in model.stopping_times if t.is_finite]
    for proc in model.processes:
        out.append(
            _guarded(
                "martingale",
                f"adapted:{proc.name}",
                lambda p=proc: _from_report("martingale", f"adapted:{p.name}", is_adapted(p.path)),
            )
        )
        if proc.kind == "predictable":
            out.append(
                _guarded(
                    "martingale",
                    f"predictable:{proc.name}",
                    lambda p=proc: _from_report(
                        "martingale", f"predictable:{p.name}", is_predictable(p.path)
                    ),
                )
            )
        if proc.kind == "increasing":
            out.append(
                _guarded(
                    "martingale",
                    f"increasing:{proc.name}",
                    lambda p=proc: _increasing_check("martingale", p),
                )
            )
            out.append(
                _guarded(
                    "martingale",
                    f"variation_identity:{proc.name}",
                    lambda p=proc: _variation_identity("martingale", p),
                )
            )
        if proc.kind == "martingale":
            out.append(
                _guarded(
                    "martingale",
                    f"martingale:{proc.name}",
                    lambda p=proc: _from_report(
                        "martingale", f"martingale:{p.name}", is_martingale(p.path)
                    ),
                )
            )
            for tname, t in finite_stops:
                out.append(
                    _guarded(
                        "martingale",
                        f"optional_sampling:{proc.name}:{tname}",
                        lambda p=proc, tn=tname, tt=t: _from_report(
                            "martingale",
                            f"optional_sampling:{p.name}:{tn}",
                            optional_sampling_check(p.path, tt),
                        ),
                    )
                )
            for tname, t in model.stopping_times:
                out.append(
                    _guarded(
                        "martingale",
                        f"stopped_martingale:{proc.name}:{tname}",
                        lambda p=proc, tn=tname, tt=t: _from_report(
                            "martingale",
                            f"stopped_martingale:{p.name}:{tn}",
                            is_martingale(stopped_process(p.path, tt)),
                        ),
                    )
                )
    return out


def _increasing_check(suite: str, proc: NamedProcess) -> CheckResult:
    worst = ZERO
    for k in range(1, len(proc.path.values)):
        for v in proc.path.increment(k).values:
            if -v > worst:
                worst = -v
    return CheckResult(suite, f"increasing:{proc.name}", worst == 0, worst)


def _variation_identity(suite: str, proc: NamedProcess) -> CheckResult:
    a = proc.path
    v = total_variation(a)
    shifted = a - ProcessPath(a.filtration, [a.values[0]] * len(a.values))
    gap = (v - shifted).max_abs()
    return CheckResult(suite, f"variation_identity:{proc.name}", gap == 0, gap)


def _suite_compensator(model: Model) -> list[CheckResult]:
    out = []
    targets = [p for p in model.processes if p.kind in ("increasing", "martingale", "adapted")]
    for proc in targets:
        name = proc.name

        def batch(p=proc, nm=name):
            results = []
            b = discrete_compensator(p.path)
            results.append(
                _from_report("compensator", f"predictable:comp({nm})", is_predictable(b))
            )
            results.append(
                _from_report(
                    "compensator", f"martingale_difference:{nm}", is_martingale(p.path - b)
                )
            )
            starts = max(abs(v) for v in b.values[0])
            results.append(_boolean("compensator", f"starts_at_zero:comp({nm})", starts == 0, starts))
            double = discrete_compensator(p.path + p.path)
            gap = (double - b - b).max_abs()
            results.append(_boolean("compensator", f"additivity:{nm}", gap == 0, gap))
            gap = (discrete_compensator(b) - b).max_abs()
            results.append(_boolean("compensator", f"idempotency:comp({nm})", gap == 0, gap))
            results.append(
                _from_report(
                    "compensator",
                    f"uniqueness:{nm}",
                    compensator_uniqueness_check(p.path, b, b),
                )
            )
            if p.kind == "increasing":
                worst = ZERO
                for k in range(1, len(b.values)):
                    for v in b.increment(k).values:
                        worst = max(worst, -v)
                results.append(
                    _boolean("compensator", f"monotone:comp({nm})", worst == 0, worst)
                )
            if p.kind == "martingale":
                flat = b.max_abs()
                results.append(
                    _boolean("compensator", f"martingale_has_zero_comp:{nm}", flat == 0, flat)
                )
            for tname, t in model.stopping_times:
                stopped_first = discrete_compensator(stopped_process(p.path, t))
                gap = (stopped_first - stopped_process(b, t)).max_abs()
                results.append(
                    _boolean("compensator", f"stop_commutes:{nm}:{tname}", gap == 0, gap)
                )
            return results

        try:
            out.extend(batch())
        except MartlabError as exc:
            out.append(
                CheckResult("compensator", f"compensator:{name}", False, None, "", f"error: {exc}")
            )
    return out


def _suite_quadratic(model: Model) -> list[CheckResult]:
    out = []
    martingales = [p for p in model.processes if p.kind == "martingale"]
    for proc in martingales:
        name = proc.name

        def batch(p=proc, nm=name):
            results = []
            m = p.path
            qv = quadratic_variation(m)
            results.append(
                _from_report(
                    "quadratic", f"square_minus_bracket:{nm}", is_martingale(m * m - qv)
                )
            )
            jump_gap = ZERO
            for k in range(1, len(m.values)):
                dq = qv.increment(k)
                dm = m.increment(k)
                for i in range(m.space.size):
                    jump_gap = max(jump_gap, abs(dq.values[i] - dm.values[i] ** 2))
            results.append(_boolean("quadratic", f"bracket_jumps:{nm}", jump_gap == 0, jump_gap))
            energy = abs(
                l2_norm_sq(m.at(m.last_index))
                - l2_norm_sq(m.at(0))
                - expectation(qv.at(qv.last_index))
            )
            results.append(_boolean("quadratic", f"energy_identity:{nm}", energy == 0, energy))
            npath = n_process(m)
            results.append(
                _from_report("quadratic", f"companion_martingale:{nm}", is_martingale(npath))
            )
            results.append(
                _from_report(
                    "quadratic",
                    f"integration_by_parts:{nm}",
                    integration_by_parts_check(m, m),
                )
            )
            lag = lagged(m)
            if is_predictable(lag).passed:
                integral = stochastic_integral(lag, m)
                results.append(
                    _from_report(
                        "quadratic", f"integral_martingale:{nm}", is_martingale(integral)
                    )
                )
            else:
                results.append(
                    CheckResult(
                        "quadratic",
                        f"integral_martingale:{nm}",
                        True,
                        ZERO,
                        "",
                        "skipped: lagged path not predictable (random start)",
                    )
                )
            return results

        try:
            out.extend(batch())
        except MartlabError as exc:
            out.append(
                CheckResult("quadratic", f"quadratic:{name}", False, None, "", f"error: {exc}")
            )
    for a in model.processes:
        for b in model.processes:
            if a.name < b.name:
                out.append(
                    _guarded(
                        "quadratic",
                        f"integration_by_parts:{a.name}:{b.name}",
                        lambda pa=a, pb=b: _from_report(
                            "quadratic",
                            f"integration_by_parts:{pa.name}:{pb.name}",
                            integration_by_parts_check(pa.path, pb.path),
                        ),
                    )
                )
    return out


def _suite_mazur(model: Model) -> list[CheckResult]:
    out = []
    for proc in model.processes:
        rows = _rows(proc.path)
        if len(rows) > 12:
            # recombination cost grows with tail length; a spread of rows
            # exercises the solver just as well on long fine grids
            stride = (len(rows) + 11) // 12
            rows = rows[::stride] + [rows[-1]]
        if len(rows) < 3:
            out.append(
                CheckResult(
                    "mazur",
                    f"recombination:{proc.name}",
                    True,
                    ZERO,
                    "",
                    "skipped: needs at least 3 time steps",
                )
            )
            continue
        window = min(4, len(rows) - 2)

        def batch(p=proc, rs=rows, w=window):
            weights, cert = mazur_sequence(rs, w)
            alphas = cert.alpha_sequence
            mono = all(a <= b + 1e-9 for a, b in zip(alphas, alphas[1:]))
            results = [
                _boolean(
                    "mazur",
                    f"alpha_monotone:{p.name}",
                    mono,
                    ZERO if mono else Fraction(1),
                ),
                _boolean(
                    "mazur",
                    f"pairwise_bounds:{p.name}",
                    cert.all_bounds_hold,
                    ZERO if cert.all_bounds_hold else Fraction(1),
                ),
            ]
            feasible = all(
                sum(cw.weights, ZERO) == 1 and all(v >= 0 for v in cw.weights)
                for cw in weights
            )
            results.append(
                _boolean(
                    "mazur",
                    f"weights_on_simplex:{p.name}",
                    feasible,
                    ZERO if feasible else Fraction(1),
                )
            )
            return results

        try:
            out.extend(batch())
        except MartlabError as exc:
            out.append(
                CheckResult("mazur", f"recombination:{proc.name}", False, None, "", f"error: {exc}")
            )
    return out


def _suite_appendix(model: Model) -> list[CheckResult]:
    out = []
    horizon = model.filtration.times[-1]
    for proc in model.processes:
        if proc.kind == "increasing":
            out.append(
                _guarded(
                    "appendix",
                    f"step_sum:{proc.name}",
                    lambda p=proc: _from_report(
                        "appendix",
                        f"step_sum:{p.name}",
                        step_sum_convergence_check(
                            [path_step_function(p.path, i) for i in range(p.path.space.size)],
                            horizon,
                        ),
                    ),
                )
            )
            out.append(
                _guarded(
                    "appendix",
                    f"uniform_jump:{proc.name}",
                    lambda p=proc: _uniform_jump_on_truncations("appendix", p),
                )
            )
        out.append(
            _guarded(
                "appendix",
                f"tail_sup_fatou:{proc.name}",
                lambda p=proc: _from_report(
                    "appendix",
                    f"tail_sup_fatou:{p.name}",
                    tail_sup_fatou_check(_rows(p.path), 0),
                ),
            )
        )
    return out


def _uniform_jump_on_truncations(suite: str, proc: NamedProcess) -> CheckResult:
    """Freeze the first outcome's path after step n; truncations converge to the path."""
    path = proc.path
    steps = len(path.values)
    target = path_step_function(path, 0)
    family = []
    for n in range(steps):
        frozen = ProcessPath(
            path.filtration,
            [path.values[min(k, n)] for k in range(steps)],
        )
        family.append(path_step_function(frozen, 0))
    rep = uniform_jump_convergence_check(family, target)
    return _from_report(suite, f"uniform_jump:{proc.name}", rep)


def run_suite(model: Model, suite: str) -> list[CheckResult]:
    """Run one named suite (or 'all'); results sorted by suite then check name."""
    if suite == "all":
        results = []
        for name in SUITE_NAMES:
            results.extend(run_suite(model, name))
        return sorted(results, key=lambda r: (r.suite, r.check))
    table = {
        "martingale": _suite_martingale,
        "compensator": _suite_compensator,
        "quadratic": _suite_quadratic,
        "mazur": _suite_mazur,
        "appendix": _suite_appendix,
    }
    if suite not in table:
        raise MartlabError(
            f"unknown suite {suite!r}; expected one of {SUITE_NAMES + ('all',)}"
        )
    return sorted(table[suite](model), key=lambda r: (r.suite, r.check))
