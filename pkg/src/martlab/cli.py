"""Command-line interface.

Three subcommands:

* ``verify``    -- run a named check suite over a model file
* ``pipeline``  -- run a convergence pipeline on a fine-grid model
* ``generate``  -- write a model file from a named generator

Exit codes are a stable contract: 0 all checks passed, 1 a check failed,
2 usage, parse or validation error.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import Sequence

from .errors import MartlabError, ModelFormatError, PreconditionError
from .prob import rat
from .processes import NEVER, StoppingTime
from .models import (
    binary_tree_space,
    dyadic_walk_model,
    jump_tree_space,
    poisson_skeleton,
    random_walk,
    randomized_instance,
)
from .quadratic import lagged
from .modelio import Model, NamedProcess, load_model, save_model
from .refinement import (
    compensator_pipeline,
    qv_pipeline,
    stopping_time_discretization_rows,
)
from .report import (
    figure_path_for,
    pipeline_report_lines,
    render_pipeline_figure,
    render_verify_figure,
    to_text,
    verify_report_lines,
    write_report,
)
from .suites import SUITE_NAMES, run_suite

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


# ---------------------------------------------------------------------------
# generators


def _first_down_stop(model_space, filtration, stride: int = 1):
    stop = []
    for label in model_space.outcomes:
        pos = label.find("d")
        stop.append(NEVER if pos < 0 else (pos + 1) * stride)
    return StoppingTime(filtration, stop)


def _generate_binary_tree(params: dict, seed: int) -> Model:
    depth = params["depth"]
    p_up = params["p_up"]
    space, filtration = binary_tree_space(depth, p_up)
    walk = random_walk(space, filtration, p_up)
    counter, _ = poisson_skeleton(space, filtration, p_up, [(1, 1)])
    first_down = _first_down_stop(space, filtration)
    capped = StoppingTime(
        filtration,
        [min(s, depth) if s != NEVER else depth for s in first_down.stop_index],
    )
    return Model(
        space,
        filtration,
        (
            NamedProcess("walk", "martingale", walk),
            NamedProcess("up_counter", "increasing", counter),
            NamedProcess("previous_walk", "predictable", lagged(walk)),
        ),
        (
            ("first_down", first_down),
            ("first_down_capped", capped),
            ("horizon", StoppingTime.constant(filtration, depth)),
        ),
    )


def _generate_dyadic_walk(params: dict, seed: int) -> Model:
    d = dyadic_walk_model(
        params["grid_level"], params["branch_level"], params["p_up"], params["horizon"]
    )
    return Model(
        d.space,
        d.filtration,
        (
            NamedProcess("walk", "martingale", d.walk),
            NamedProcess("up_counter", "increasing", d.up_counter),
            NamedProcess("single_jump", "increasing", d.single_jump),
        ),
        (
            ("first_down", d.jump_time),
            ("first_down_capped", d.jump_time_capped),
        ),
    )


def _parse_jump_law(text: str) -> list[tuple[Fraction, Fraction]]:
    law = []
    for piece in text.split(";"):
        piece = piece.strip()
        if not piece:
            continue
        if ":" not in piece:
            raise ModelFormatError("params.law", f"expected 'value:prob', got {piece!r}")
        v, q = piece.split(":", 1)
        law.append((Fraction(v), Fraction(q)))
    if not law:
        raise ModelFormatError("params.law", "empty jump law")
    return law


def _generate_poisson(params: dict, seed: int) -> Model:
    depth = params["depth"]
    p_jump = params["p_jump"]
    law = _parse_jump_law(params["law"])
    space, filtration = jump_tree_space(depth, p_jump, law)
    jumps, closed_form = poisson_skeleton(space, filtration, p_jump, law)
    return Model(
        space,
        filtration,
        (
            NamedProcess("jumps", "increasing", jumps),
            NamedProcess("mean_drift", "predictable", closed_form),
            NamedProcess("compensated_jumps", "martingale", jumps - closed_form),
        ),
        (("horizon", StoppingTime.constant(filtration, depth)),),
    )


def _generate_randomized(params: dict, seed: int) -> Model:
    inst = randomized_instance(seed, params["max_outcomes"], params["max_steps"])
    last = inst.filtration.last_index
    capped = StoppingTime(
        inst.filtration,
        [min(s, last) if s != NEVER else last for s in inst.stopping_time.stop_index],
    )
    return Model(
        inst.space,
        inst.filtration,
        (
            NamedProcess("increasing", "increasing", inst.increasing),
            NamedProcess("martingale", "martingale", inst.martingale),
            NamedProcess("predictable", "predictable", inst.predictable),
        ),
        (
            ("level_crossing", inst.stopping_time),
            ("level_crossing_capped", capped),
        ),
    )


GENERATORS = {
    "binary_tree": (
        _generate_binary_tree,
        {"depth": ("int", 3), "p_up": ("rational", Fraction(1, 2))},
    ),
    "dyadic_walk": (
        _generate_dyadic_walk,
        {
            "grid_level": ("int", 6),
            "branch_level": ("int", 2),
            "p_up": ("rational", Fraction(1, 2)),
            "horizon": ("int", 1),
        },
    ),
    "poisson": (
        _generate_poisson,
        {"depth": ("int", 3), "p_jump": ("rational", Fraction(1, 2)), "law": ("str", "1:1")},
    ),
    "randomized": (
        _generate_randomized,
        {"max_outcomes": ("int", 16), "max_steps": ("int", 6)},
    ),
}


def _parse_params(generator: str, text: str | None) -> dict:
    _, schema = GENERATORS[generator]
    values = {name: default for name, (_, default) in schema.items()}
    if not text:
        return values
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "=" not in piece:
            raise ModelFormatError("params", f"expected key=value, got {piece!r}")
        key, raw = piece.split("=", 1)
        key = key.strip()
        if key not in schema:
            raise ModelFormatError(
                "params", f"unknown parameter {key!r} for {generator} (known: {sorted(schema)})"
            )
        kind, _ = schema[key]
        try:
            if kind == "int":
                values[key] = int(raw)
            elif kind == "rational":
                values[key] = rat(raw.strip())
            else:
                values[key] = raw.strip()
        except (ValueError, MartlabError) as exc:
            raise ModelFormatError(f"params.{key}", f"bad value {raw!r}: {exc}") from None
    return values


# ---------------------------------------------------------------------------
# commands


def _parse_levels(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(p) for p in text.split(",") if p.strip()]


def cmd_verify(args) -> int:
    model = load_model(args.model)
    results = run_suite(model, args.suite)
    lines = verify_report_lines(results)
    sys.stdout.write(to_text(lines))
    if args.report:
        write_report(lines, args.report)
        if not args.no_figures:
            render_verify_figure(results, figure_path_for(args.report))
    failed = [r for r in results if not r.passed]
    if failed:
        for r in failed[:5]:
            sys.stdout.write(
                f"FAILED {r.suite}:{r.check}"
                + (f" witness: {r.witness}" if r.witness else "")
                + (f" ({r.note})" if r.note else "")
                + "\n"
            )
        return EXIT_CHECK_FAILED
    return EXIT_PASS


def _pick_process(model: Model, args, kind: str) -> NamedProcess:
    if args.process:
        return model.process(args.process)
    proc = model.first_of_kind(kind)
    if proc is None:
        raise ModelFormatError("processes", f"model has no process of kind {kind!r}")
    return proc


def cmd_pipeline(args) -> int:
    model = load_model(args.model)
    levels = _parse_levels(args.levels)
    stop_rows = ()
    if args.pipeline == "compensator":
        proc = _pick_process(model, args, "increasing")
        table = compensator_pipeline(proc.path, levels, args.window, args.exact_mazur)
        finite = [(n, t) for n, t in model.stopping_times if t.is_finite]
        if finite:
            stop_rows = stopping_time_discretization_rows(proc.path, finite[0][1], levels)
    elif args.pipeline == "qv":
        proc = _pick_process(model, args, "martingale")
        table = qv_pipeline(proc.path, levels, args.window, args.exact_mazur)
    else:
        raise ModelFormatError("pipeline", f"unknown pipeline {args.pipeline!r}")
    lines = pipeline_report_lines(table, stop_rows)
    sys.stdout.write(to_text(lines))
    if args.report:
        write_report(lines, args.report)
        if not args.no_figures:
            render_pipeline_figure(table, figure_path_for(args.report), stop_rows)
    if not table.passed:
        return EXIT_CHECK_FAILED
    if stop_rows and any(r.identity_gap != 0 for r in stop_rows):
        return EXIT_CHECK_FAILED
    return EXIT_PASS


def cmd_generate(args) -> int:
    if args.generator not in GENERATORS:
        raise ModelFormatError(
            "generator", f"unknown generator {args.generator!r} (known: {sorted(GENERATORS)})"
        )
    build, _ = GENERATORS[args.generator]
    params = _parse_params(args.generator, args.params)
    model = build(params, args.seed)
    save_model(model, args.out)
    load_model(args.out)  # round-trip sanity
    sys.stdout.write(f"wrote {args.out}\n")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="martlab",
        description="Exact checks and convergence pipelines for discrete-time martingales.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run a check suite over a model file")
    p_verify.add_argument("--model", required=True, help="model file (JSON)")
    p_verify.add_argument(
        "--suite",
        default="all",
        choices=SUITE_NAMES + ("all",),
        help="which battery of checks to run",
    )
    p_verify.add_argument("--report", default=None, help="write a TSV report here")
    p_verify.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering next to the report"
    )
    p_verify.set_defaults(fn=cmd_verify)

    p_pipe = sub.add_parser("pipeline", help="run a convergence pipeline")
    p_pipe.add_argument("--model", required=True, help="fine-grid model file (JSON)")
    p_pipe.add_argument(
        "--pipeline", required=True, choices=("compensator", "qv"), help="which pipeline"
    )
    p_pipe.add_argument(
        "--levels", required=True, help="dyadic levels, e.g. 0..6 or 0,2,4,6"
    )
    p_pipe.add_argument("--window", type=int, default=4, help="recombination window size")
    p_pipe.add_argument(
        "--process", default=None, help="process name (default: first of the right kind)"
    )
    p_pipe.add_argument(
        "--exact-mazur",
        action="store_true",
        help="solve recombination weights with the rational solver only",
    )
    p_pipe.add_argument("--report", default=None, help="write a TSV report here")
    p_pipe.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering next to the report"
    )
    p_pipe.set_defaults(fn=cmd_pipeline)

    p_gen = sub.add_parser("generate", help="write a model file from a generator")
    p_gen.add_argument("--generator", required=True, help=f"one of {sorted(GENERATORS)}")
    p_gen.add_argument(
        "--params", default=None, help="comma-separated key=value generator parameters"
    )
    p_gen.add_argument("--seed", type=int, default=0, help="seed for randomized generators")
    p_gen.add_argument("--out", required=True, help="output model file")
    p_gen.set_defaults(fn=cmd_generate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ModelFormatError, PreconditionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except MartlabError as exc:
        sys.stderr.write(f"internal check failure: {exc}\n")
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
