"""Report rendering: deterministic TSV, aligned text, and figure files.

Structured reports are tab-delimited with a fixed line order and exact
rational strings "p/q", so identical runs produce byte-identical files.
The human-readable text shown on stdout is derived from the same rows.
When a report file is written, a PNG figure is rendered next to it
(verify: violations per check; pipeline: error decay per level).
matplotlib is imported lazily and only the object-oriented API is used,
so no backend or global state is involved.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .modelio import rational_to_str
from .refinement import ConvergenceTable, StoppingTimeRow
from .suites import CheckResult

_MISSING = "-"


def _cell(x) -> str:
    if x is None:
        return _MISSING
    if isinstance(x, Fraction):
        return rational_to_str(x)
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def verify_report_lines(results: Sequence[CheckResult]) -> list[list[str]]:
    lines = [["martlab-report", "verify", "v1"]]
    lines.append(["suite", "check", "passed", "worst_violation", "witness", "note"])
    for r in results:
        lines.append(
            [
                r.suite,
                r.check,
                _cell(r.passed),
                _cell(r.worst_violation),
                r.witness or _MISSING,
                r.note or _MISSING,
            ]
        )
    passed = sum(1 for r in results if r.passed)
    lines.append(["summary", "passed", _cell(passed == len(results)), f"{passed}/{len(results)}", _MISSING, _MISSING])
    return lines


def pipeline_report_lines(
    table: ConvergenceTable, stop_rows: Sequence[StoppingTimeRow] = ()
) -> list[list[str]]:
    lines = [["martlab-report", "pipeline", "v1"]]
    lines.append(["pipeline", table.pipeline])
    lines.append(["window", str(table.window)])
    lines.append(["levels", ",".join(str(n) for n in table.levels)])
    for note in table.notes:
        lines.append(["note", note])
    lines.append(["columns", "level", "sup_error", "terminal_error", "jump_error"])
    for r in table.rows:
        lines.append(
            ["row", str(r.level), _cell(r.sup_error), _cell(r.terminal_error), _cell(r.jump_error)]
        )
    for pos, alpha in enumerate(table.certificate.alpha_sequence):
        lines.append(["alpha", str(table.levels[pos]), repr(alpha)])
    for b in table.certificate.pairwise_bound_checks:
        lines.append(["bound", str(b.n), str(b.m), repr(b.lhs), repr(b.rhs), _cell(b.holds)])
    for row in stop_rows:
        lines.append(
            ["stop", str(row.level), _cell(row.identity_gap), _cell(row.expectation_error)]
        )
    lines.append(["top_exact", _cell(table.top_exact)])
    lines.append(["nonincreasing", _cell(table.nonincreasing_tail)])
    lines.append(["passed", _cell(table.passed)])
    return lines


def to_tsv(lines: Sequence[Sequence[str]]) -> str:
    return "".join("\t".join(line) + "\n" for line in lines)


def to_text(lines: Sequence[Sequence[str]]) -> str:
    """Column-aligned rendering of the same rows for terminals."""
    widths: dict[int, int] = {}
    for line in lines:
        for i, cell in enumerate(line):
            widths[i] = max(widths.get(i, 0), len(cell))
    out = []
    for line in lines:
        out.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(line)).rstrip())
    return "\n".join(out) + "\n"


def write_report(lines: Sequence[Sequence[str]], path: "str | Path") -> None:
    Path(path).write_text(to_tsv(lines), encoding="utf-8")


_FIG_METADATA = {"Software": "martlab"}


def render_verify_figure(results: Sequence[CheckResult], path: "str | Path") -> None:
    """Horizontal bar chart of per-check violations (zero bars mean pass)."""
    from matplotlib.figure import Figure

    names = [f"{r.suite}:{r.check}" for r in results]
    values = [float(r.worst_violation) if r.worst_violation is not None else 1.0 for r in results]
    colors = ["#2a7e43" if r.passed else "#b83232" for r in results]
    fig = Figure(figsize=(8, max(2.0, 0.28 * len(results) + 1.2)))
    ax = fig.add_subplot(1, 1, 1)
    ypos = range(len(results))
    ax.barh(list(ypos), values, color=colors)
    ax.set_yticks(list(ypos))
    ax.set_yticklabels(names, fontsize=6)
    ax.invert_yaxis()
    ax.set_xlabel("worst violation (exact rational, shown as float)")
    ax.set_title("verification checks")
    fig.tight_layout()
    fig.savefig(str(path), metadata=_FIG_METADATA)


def render_pipeline_figure(
    table: ConvergenceTable, path: "str | Path", stop_rows: Sequence[StoppingTimeRow] = ()
) -> None:
    """Error decay across levels plus the attained recombination minima."""
    from matplotlib.figure import Figure

    fig = Figure(figsize=(7.5, 5.5))
    ax = fig.add_subplot(2, 1, 1)
    levels = [r.level for r in table.rows]
    series = [
        ("sup error", [float(r.sup_error) for r in table.rows], "o"),
        ("terminal error", [float(r.terminal_error) for r in table.rows], "s"),
    ]
    if any(r.jump_error is not None for r in table.rows):
        series.append(("jump error", [float(r.jump_error) for r in table.rows], "^"))
    for label, ys, marker in series:
        ax.plot(levels, ys, marker=marker, label=label)
    if stop_rows:
        ax.plot(
            [r.level for r in stop_rows],
            [float(r.expectation_error) for r in stop_rows],
            marker="x",
            linestyle="--",
            label="stop expectation error",
        )
    ax.set_xlabel("dyadic level")
    ax.set_ylabel("exact error (as float)")
    ax.set_title(f"{table.pipeline} pipeline, window {table.window}")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)

    ax2 = fig.add_subplot(2, 1, 2)
    ax2.plot(
        list(table.levels), list(table.certificate.alpha_sequence), marker="d", color="#555588"
    )
    ax2.set_xlabel("tail start level")
    ax2.set_ylabel("attained tail minimum")
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(str(path), metadata=_FIG_METADATA)


def figure_path_for(report_path: "str | Path") -> Path:
    p = Path(report_path)
    return p.with_suffix(".png") if p.suffix != ".png" else p.with_suffix(".fig.png")
