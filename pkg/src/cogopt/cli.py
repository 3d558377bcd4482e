"""Command-line interface: run batches, validate scripts, inspect setups.

``cogopt run`` executes a seeded batch of one case over one or more
benchmark instances and reports aggregate results as CSV (or a terminal
table), optionally with run-length-distribution files, per-run traces, and
rendered figures alongside each delimited output.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import catalog
from .harness import (
    ExperimentError,
    ExperimentPlan,
    ExperimentResult,
    RESULT_COLUMNS,
    emit_rld,
    emit_trace,
    result_row,
    run_experiment,
    write_results_csv,
)
from .problems import DEFAULT_EPS_H
from .script import (
    ScriptError,
    load_script,
    reference_script_path,
    resolve_case,
    validate,
)

__all__ = ["main"]


def _add_script_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--script",
        type=Path,
        default=None,
        metavar="PATH",
        help="script file (default: the bundled reference script)",
    )


def _load(args: argparse.Namespace):
    path = args.script if args.script is not None else reference_script_path()
    return load_script(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cogopt",
        description="Cooperative-group optimization on the G01-G13 benchmarks.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    runner = commands.add_parser(
        "run", help="execute a seeded batch and report aggregate results"
    )
    _add_script_option(runner)
    runner.add_argument("--case", required=True, help="case id, e.g. DE2 or #DE2")
    runner.add_argument(
        "--problem",
        action="append",
        required=True,
        metavar="ID",
        help="instance id (repeatable); 'all' expands to G01-G13",
    )
    runner.add_argument("--runs", type=int, default=50, help="runs per instance")
    runner.add_argument("--seed", type=int, default=42, help="base seed")
    runner.add_argument("--agents", type=int, default=None, metavar="N",
                        help="override the script's group size")
    runner.add_argument("--cycles", type=int, default=None, metavar="T",
                        help="override the script's cycle count")
    runner.add_argument("--eps-h", type=float, default=DEFAULT_EPS_H,
                        help="equality relaxation half-width")
    runner.add_argument("--out", type=Path, default=None, metavar="CSV",
                        help="write the results table here (default: stdout)")
    runner.add_argument("--rld", type=Path, default=None, metavar="DIR",
                        help="write per-instance run-length CSVs here")
    runner.add_argument("--trace", type=Path, default=None, metavar="DIR",
                        help="write per-run progress CSVs here")
    runner.add_argument("--plot", action="store_true",
                        help="render a figure next to each CSV output")
    runner.set_defaults(func=_cmd_run)

    checker = commands.add_parser("validate", help="check a script file")
    _add_script_option(checker)
    checker.set_defaults(func=_cmd_validate)

    lister = commands.add_parser("list-cases", help="list a script's cases")
    _add_script_option(lister)
    lister.set_defaults(func=_cmd_list_cases)

    shower = commands.add_parser("show-problem", help="describe an instance")
    shower.add_argument("problem", metavar="ID", help="instance id, e.g. G05")
    shower.add_argument("--eps-h", type=float, default=DEFAULT_EPS_H,
                        help="equality relaxation half-width")
    shower.set_defaults(func=_cmd_show_problem)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScriptError as error:
        print(f"script error: {error}", file=sys.stderr)
        return 2
    except KeyError as error:
        print(f"error: {error.args[0]}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 2


def _slug(case_id: str) -> str:
    return case_id.lstrip("#")


def _cmd_run(args: argparse.Namespace) -> int:
    script = _load(args)
    resolve_case(script, args.case)  # reject unknown/empty cases up front
    problems = []
    for entry in args.problem:
        if entry.lower() == "all":
            problems.extend(catalog.instance_ids())
        else:
            problems.append(entry.upper())
    if args.plot and args.out is None and args.rld is None and args.trace is None:
        print("error: --plot needs --out, --rld, or --trace to sit beside",
              file=sys.stderr)
        return 2
    plan = ExperimentPlan(
        script=script,
        case_id=args.case,
        problem_ids=tuple(dict.fromkeys(problems)),
        runs=args.runs,
        base_seed=args.seed,
        n_agents=args.agents,
        n_cycles=args.cycles,
        eps_h=args.eps_h,
        collect_trace=args.trace is not None,
    )
    failures: tuple[tuple[str, int, str], ...] = ()
    try:
        experiment = run_experiment(plan)
    except ExperimentError as error:
        experiment = error.partial
        failures = error.failures

    _emit(args, experiment)
    for instance, seed, message in failures:
        print(f"run failed: {instance} seed {seed}: {message}", file=sys.stderr)
    return 1 if failures else 0


def _emit(args: argparse.Namespace, experiment: ExperimentResult) -> None:
    if args.out is not None:
        write_results_csv(experiment.outcomes, args.out)
        print(f"wrote {args.out}")
        if args.plot and experiment.outcomes:
            from .plotting import results_figure, save_figure

            target = args.out.with_suffix(".png")
            case = experiment.outcomes[0].case_id
            save_figure(results_figure(experiment.outcomes, title=case), target)
            print(f"wrote {target}")
    else:
        _print_table(experiment)

    if args.rld is not None:
        args.rld.mkdir(parents=True, exist_ok=True)
        for outcome in experiment.outcomes:
            slug = f"{_slug(outcome.case_id)}_{outcome.instance_id}"
            path = args.rld / f"rld_{slug}.csv"
            emit_rld(outcome.rld, path)
            print(f"wrote {path}")
            if args.plot:
                from .plotting import rld_figure, save_figure

                figure = rld_figure(
                    {outcome.case_id: outcome.rld}, title=outcome.instance_id
                )
                save_figure(figure, path.with_suffix(".png"))
                print(f"wrote {path.with_suffix('.png')}")

    if args.trace is not None:
        args.trace.mkdir(parents=True, exist_ok=True)
        for outcome in experiment.outcomes:
            for result in outcome.results:
                slug = (
                    f"{_slug(outcome.case_id)}_{outcome.instance_id}"
                    f"_s{result.seed}"
                )
                path = args.trace / f"trace_{slug}.csv"
                emit_trace(result, path)
                if args.plot:
                    from .plotting import save_figure, trace_figure

                    figure = trace_figure(
                        result, title=f"{outcome.instance_id} seed {result.seed}"
                    )
                    save_figure(figure, path.with_suffix(".png"))
            print(f"wrote {args.trace}/trace_{_slug(outcome.case_id)}_"
                  f"{outcome.instance_id}_s*.csv")


def _print_table(experiment: ExperimentResult) -> None:
    rows = [result_row(outcome) for outcome in experiment.outcomes]
    if not rows:
        print("no completed runs")
        return
    # Shorten float cells for terminal reading; CSV keeps full precision.
    for row in rows:
        for key in ("mean", "stdev", "median", "best", "worst", "nfe_mean"):
            cell = row[key]
            if cell and not cell.startswith("("):
                row[key] = f"{float(cell):.6g}"
    widths = {
        name: max(len(name), *(len(row[name]) for row in rows))
        for name in RESULT_COLUMNS
    }
    header = "  ".join(name.ljust(widths[name]) for name in RESULT_COLUMNS)
    print(header)
    print("-" * len(header))
    for row in rows:
        print("  ".join(row[name].ljust(widths[name]) for name in RESULT_COLUMNS))


def _cmd_validate(args: argparse.Namespace) -> int:
    script = _load(args)
    diagnostics = validate(script)
    if diagnostics:
        for diagnostic in diagnostics:
            print(diagnostic)
        return 1
    print(f"ok: {len(script.spec_mp)} protocol rows, "
          f"{len(script.spec_g)} heuristics, {len(script.spec_mm)} cases")
    return 0


def _cmd_list_cases(args: argparse.Namespace) -> int:
    script = _load(args)
    for case_id in script.case_ids():
        case = resolve_case(script, case_id)
        print(case_id)
        for row, edge in zip(case.rows, case.cumulative):
            updates = ", ".join(row.e_upd)
            print(f"  {row.generative.id_g:<8s} p={row.weight:g} "
                  f"updates: {updates}")
    return 0


def _cmd_show_problem(args: argparse.Namespace) -> int:
    problem = catalog.load(args.problem.upper(), eps_h=args.eps_h)
    traits = catalog.traits(problem.instance_id)
    equalities = sum(1 for lo, hi in problem.raw_intervals if lo == hi)
    print(f"{problem.instance_id}: {traits.objective_kind} objective, "
          f"{problem.dimension} variables")
    print(f"  constraints: {problem.n_constraints} "
          f"({equalities} equalities relaxed to +/-{problem.eps_h:g})")
    print(f"  linear inequalities: {traits.linear_inequalities}, "
          f"nonlinear inequalities: {traits.nonlinear_inequalities}, "
          f"nonlinear equalities: {traits.nonlinear_equalities}")
    print(f"  active constraints at the optimum: {traits.active_constraints}")
    print(f"  estimated feasible share of the box: {traits.feasible_share}")
    bounds = ", ".join(
        f"[{lo:g}, {hi:g}]" for lo, hi in
        list(zip(problem.lower, problem.upper))[:4]
    )
    suffix = ", ..." if problem.dimension > 4 else ""
    print(f"  box: {bounds}{suffix}")
    if problem.known_optimum is not None:
        print(f"  known optimum: {problem.known_optimum} "
              f"(solved below {problem.solved_tol:g})")
    return 0
