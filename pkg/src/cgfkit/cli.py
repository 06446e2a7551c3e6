"""Command-line front end.

Subcommands: parse, compile, run, ensemble, rnai-demo, verify-prop,
verify-term.  Outputs are CSV/JSON/program text on stdout or --out; the
--figures DIR option additionally renders PNG figures for the run and
verification paths.  Exit status: 0 success (and every verdict consistent),
1 usage error, 2 when any verification verdict is violated.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
from datetime import datetime, timezone

from . import analysis, rnai
from .cgf import CgfError
from .compiler import (
    NAIVE,
    RECURSIVE,
    EncodingConfig,
    compile_naive,
    compile_recursive,
    machine_with_state,
)
from .parser import parse_cgf, print_cgf
from .rm import RmError, RmState, parse_rm
from .ssa import (
    StopCondition,
    run_ensemble,
    simulate,
    trajectory_to_csv,
    trial_summaries_to_csv,
    trial_summaries_to_json,
)

__all__ = ["main"]

USAGE_ERROR = 1
VIOLATED_ERROR = 2


class _CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to status 2
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)


def _header(args: argparse.Namespace, command: str) -> str:
    if getattr(args, "no_header", False):
        return ""
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return f"# cgfkit {command} generated={stamp}\n"


def _parse_range(text: str) -> list[int]:
    if ".." in text:
        low, _, high = text.partition("..")
        values = list(range(int(low), int(high) + 1))
        if not values:
            raise _CliError(f"empty range {text!r}")
        return values
    return [int(text)]


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _stop_condition(args: argparse.Namespace) -> tuple[StopCondition, int]:
    step_limit = args.max_steps if args.max_steps is not None else 1_000_000
    kind = args.stop
    if kind == "terminal":
        return StopCondition.terminal(), step_limit
    if kind == "max-steps":
        if args.max_steps is None:
            raise _CliError("--stop max-steps needs --max-steps")
        return StopCondition.max_steps(args.max_steps), step_limit
    if kind == "max-time":
        if args.max_time is None:
            raise _CliError("--stop max-time needs --max-time")
        return StopCondition.max_time(args.max_time), step_limit
    name, _, count = kind.partition(":")[2].partition(":")
    if not name or not count.isdigit():
        raise _CliError(f"bad stop condition {kind!r} (use species:NAME:COUNT)")
    return StopCondition.species_reached(name, int(count)), step_limit


def _figure_path(args: argparse.Namespace, name: str) -> str | None:
    directory = getattr(args, "figures", None)
    if directory is None:
        return None
    os.makedirs(directory, exist_ok=True)
    return os.path.join(directory, name)


def _figures():
    # deferred so plain runs never pay the matplotlib import
    from . import figures

    return figures


def _cmd_parse(args: argparse.Namespace) -> int:
    program = parse_cgf(_read_input(args.input))
    _emit(_header(args, "parse") + print_cgf(program), args.out)
    return 0


def _cmd_compile(args: argparse.Namespace) -> int:
    rm = parse_rm(_read_input(args.input))
    cfg = EncodingConfig(
        scheme=args.scheme,
        h=args.h if args.scheme == RECURSIVE else 0,
        sirna_per_cleave=args.sirna_per_cleave,
        sirna_per_degrade=args.sirna_per_degrade,
        aberrant_branch=args.aberrant,
    )
    machine = compile_naive(rm, cfg) if args.scheme == NAIVE else compile_recursive(rm, cfg)
    machine = machine_with_state(machine, RmState(args.pc, args.r1, args.r2))
    _emit(_header(args, "compile") + print_cgf(machine.program), args.out)
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    program = parse_cgf(_read_input(args.input))
    stop, step_limit = _stop_condition(args)
    trajectory = simulate(program, stop, args.seed, step_limit=step_limit)
    species = sorted(program.env)
    buffer = io.StringIO()
    buffer.write(_header(args, "run"))
    trajectory_to_csv(trajectory, species, buffer, initial=program.init)
    _emit(buffer.getvalue(), args.out)
    figure = _figure_path(args, f"trajectory-seed{args.seed}.png")
    if figure:
        _figures().trajectory_figure(
            trajectory, species, figure, initial_counts=program.init.as_dict()
        )
    return 0


def _cmd_ensemble(args: argparse.Namespace) -> int:
    program = parse_cgf(_read_input(args.input))
    stop, step_limit = _stop_condition(args)
    summaries = run_ensemble(
        program, stop, args.trials, args.seed, jobs=args.jobs, step_limit=step_limit
    )
    species = sorted(program.env)
    if args.json:
        _emit(trial_summaries_to_json(summaries, args.seed) + "\n", args.out)
    else:
        buffer = io.StringIO()
        buffer.write(_header(args, "ensemble"))
        trial_summaries_to_csv(summaries, species, buffer)
        _emit(buffer.getvalue(), args.out)
    return 0


def _cmd_rnai_demo(args: argparse.Namespace) -> int:
    overrides = rnai.parse_param_overrides(args.set or [])
    if args.params:
        params = rnai.load_params(_read_input(args.params), overrides)
    else:
        params = rnai.RnaiParams(**overrides)
    program = rnai.build_recursive_rnai(params) if args.recursive else rnai.build_rnai(params)
    if args.emit_cgf:
        _emit(_header(args, "rnai-demo") + print_cgf(program), args.out)
        return 0
    stop, step_limit = _stop_condition(args)
    trajectory = simulate(program, stop, args.seed, step_limit=step_limit)
    species = sorted(program.env)
    buffer = io.StringIO()
    buffer.write(_header(args, "rnai-demo"))
    trajectory_to_csv(trajectory, species, buffer, initial=program.init)
    _emit(buffer.getvalue(), args.out)
    figure = _figure_path(args, f"rnai-{'recursive' if args.recursive else 'plain'}-seed{args.seed}.png")
    if figure:
        shown = ["mRNA", "dsRNA", "siRNA", "Dicer", "RISC"]
        _figures().trajectory_figure(
            trajectory, shown, figure, initial_counts=program.init.as_dict(),
            title="recursive interference" if args.recursive else "interference",
        )
    return 0


def _verdict_exit(reports) -> int:
    return 0 if all(r.consistent for r in reports) else VIOLATED_ERROR


def _cmd_verify_prop(args: argparse.Namespace) -> int:
    reports = analysis.verify_proposition(
        _parse_range(args.l),
        _parse_range(args.h),
        mc_trials=args.trials,
        seed=args.seed,
        jobs=args.jobs,
    )
    if args.json:
        _emit(analysis.reports_to_json(reports) + "\n", args.out)
    else:
        buffer = io.StringIO()
        buffer.write(_header(args, "verify-prop"))
        analysis.reports_to_csv(reports, buffer)
        _emit(buffer.getvalue(), args.out)
    figure = _figure_path(args, "proposition.png")
    if figure:
        _figures().proposition_figure(reports, figure)
    return _verdict_exit(reports)


def _cmd_verify_term(args: argparse.Namespace) -> int:
    rm = parse_rm(_read_input(args.rm))
    cfg = EncodingConfig(
        scheme=RECURSIVE,
        sirna_per_cleave=args.sirna_per_cleave,
        sirna_per_degrade=args.sirna_per_degrade,
    )
    reports = analysis.verify_termination(
        rm,
        RmState(0, args.r1, args.r2),
        _parse_int_list(args.h),
        args.trials,
        seed=args.seed,
        jobs=args.jobs,
        cfg=cfg,
    )
    if args.json:
        _emit(analysis.reports_to_json(reports) + "\n", args.out)
    else:
        buffer = io.StringIO()
        buffer.write(_header(args, "verify-term"))
        analysis.reports_to_csv(reports, buffer)
        _emit(buffer.getvalue(), args.out)
    figure = _figure_path(args, "termination.png")
    if figure:
        _figures().termination_figure(reports, figure)
    return _verdict_exit(reports)


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="output path (default stdout)")
    parser.add_argument("--no-header", action="store_true", help="omit the timestamped header line")


def _add_stop_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--stop",
        default="terminal",
        help="terminal | max-steps | max-time | species:NAME:COUNT (default terminal)",
    )
    parser.add_argument("--max-steps", type=int, help="step budget")
    parser.add_argument("--max-time", type=float, help="time horizon")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cgfkit", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    cmd = commands.add_parser("parse", help="validate a program and print its canonical form")
    cmd.add_argument("input", help="program file, or - for stdin")
    _add_output_flags(cmd)
    cmd.set_defaults(handler=_cmd_parse)

    cmd = commands.add_parser("compile", help="compile a register machine")
    cmd.add_argument("input", help="machine file, or - for stdin")
    cmd.add_argument("--scheme", choices=[NAIVE, RECURSIVE], default=RECURSIVE)
    cmd.add_argument("--h", type=int, default=0, help="initial inhibitor count (recursive)")
    cmd.add_argument("--sirna-per-cleave", type=int, default=1)
    cmd.add_argument("--sirna-per-degrade", type=int, default=1)
    cmd.add_argument("--aberrant", action="store_true", help="keep the aberrant-message branch")
    cmd.add_argument("--pc", type=int, default=0, help="initial program counter")
    cmd.add_argument("--r1", type=int, default=0)
    cmd.add_argument("--r2", type=int, default=0)
    _add_output_flags(cmd)
    cmd.set_defaults(handler=_cmd_compile)

    cmd = commands.add_parser("run", help="simulate one seeded trajectory to CSV")
    cmd.add_argument("input", help="program file, or - for stdin")
    cmd.add_argument("--seed", type=int, default=0)
    _add_stop_flags(cmd)
    cmd.add_argument("--figures", help="directory for PNG figures")
    _add_output_flags(cmd)
    cmd.set_defaults(handler=_cmd_run)

    cmd = commands.add_parser("ensemble", help="independent trials, summarized")
    cmd.add_argument("input", help="program file, or - for stdin")
    cmd.add_argument("--trials", type=int, default=100)
    cmd.add_argument("--jobs", type=int, default=1)
    cmd.add_argument("--seed", type=int, default=0)
    cmd.add_argument("--json", action="store_true", help="JSON summary instead of CSV")
    _add_stop_flags(cmd)
    _add_output_flags(cmd)
    cmd.set_defaults(handler=_cmd_ensemble)

    cmd = commands.add_parser("rnai-demo", help="build and simulate the interference network")
    cmd.add_argument("--recursive", action="store_true", help="include inhibition feedback")
    cmd.add_argument("--params", help="key=value parameter file")
    cmd.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one parameter")
    cmd.add_argument("--emit-cgf", action="store_true", help="print the program instead of running")
    cmd.add_argument("--seed", type=int, default=0)
    _add_stop_flags(cmd)
    cmd.add_argument("--figures", help="directory for PNG figures")
    _add_output_flags(cmd)
    cmd.set_defaults(handler=_cmd_rnai_demo)

    cmd = commands.add_parser("verify-prop", help="decrement-probability verification sweep")
    cmd.add_argument("--l", default="0..5", help="register counts, e.g. 0..5 or 2")
    cmd.add_argument("--h", default="1..50", help="inhibitor counts, e.g. 1..50")
    cmd.add_argument("--trials", type=int, default=0, help="Monte-Carlo trials per cell (0 = exact only)")
    cmd.add_argument("--seed", type=int, default=0)
    cmd.add_argument("--jobs", type=int, default=1)
    cmd.add_argument("--json", action="store_true")
    cmd.add_argument("--figures", help="directory for PNG figures")
    _add_output_flags(cmd)
    cmd.set_defaults(handler=_cmd_verify_prop)

    cmd = commands.add_parser("verify-term", help="probabilistic-termination verification")
    cmd.add_argument("--rm", required=True, help="machine file")
    cmd.add_argument("--r1", type=int, default=0)
    cmd.add_argument("--r2", type=int, default=0)
    cmd.add_argument("--h", default="10,100", help="comma list of inhibitor counts")
    cmd.add_argument("--trials", type=int, default=10_000)
    cmd.add_argument("--seed", type=int, default=0)
    cmd.add_argument("--jobs", type=int, default=1)
    cmd.add_argument("--sirna-per-cleave", type=int, default=1)
    cmd.add_argument("--sirna-per-degrade", type=int, default=1)
    cmd.add_argument("--json", action="store_true")
    cmd.add_argument("--figures", help="directory for PNG figures")
    _add_output_flags(cmd)
    cmd.set_defaults(handler=_cmd_verify_term)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    try:
        return args.handler(args)
    except (_CliError, CgfError, RmError, ValueError) as err:
        print(f"cgfkit: error: {err}", file=sys.stderr)
        return USAGE_ERROR
    except OSError as err:
        print(f"cgfkit: error: {err}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
