"""Command-line entry point: run, plan, check and validate scenarios."""

from __future__ import annotations

import argparse
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .executive import ConstraintSyntaxError, UnknownRegion
from .ltl import LassoWord, LTLSyntaxError, UnknownProposition, accepts_lasso, eval_lasso, parse, translate
from .ltl.formula import atoms
from .planner import NoPlanFound, export_plan
from .scenario import ParseError, ValidationError, load_scenario
from . import sim

EXIT_OK = 0
EXIT_INCOMPLETE = 1
EXIT_NO_PLAN = 2
EXIT_BLOCKED = 3
EXIT_USAGE = 64
EXIT_DATA = 65

STATUS_CODES = {sim.COMPLETED: EXIT_OK, sim.NO_PLAN: EXIT_NO_PLAN, sim.BLOCKED: EXIT_BLOCKED,
                sim.HORIZON: EXIT_INCOMPLETE}

DATA_ERRORS = (ParseError, ValidationError, LTLSyntaxError, UnknownProposition, UnknownRegion,
               ConstraintSyntaxError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _formats(text: str) -> list:
    out = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in out if f not in sim.FORMATS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"formats must be drawn from {','.join(sim.FORMATS)}")
    return out


def _symbols(text: str) -> list:
    """``"{a,b} {} {c}"`` to a list of symbol sets."""
    text = text.strip()
    if not text:
        return []
    if not re.fullmatch(r"(\{[^{}]*\}\s*)+", text):
        raise UsageError(f"cannot read symbol sequence {text!r}; write e.g. '{{a,b}} {{}} {{c}}'")
    return [{a.strip() for a in body.split(",") if a.strip()} for body in re.findall(r"\{([^{}]*)\}", text)]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ltlnav", description="Temporal-logic reactive navigation simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate one or more scenarios")
    r.add_argument("scenario", nargs="+", help="bundled scenario name or path to a scenario file")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out", type=Path, default=None, help="directory for exported artefacts")
    r.add_argument("--samples", type=int, default=None, help="planner sample budget")
    r.add_argument("--formats", type=_formats, default=list(sim.FORMATS))
    r.add_argument("--jobs", type=int, default=1, help="parallel workers for several scenarios")

    pl = sub.add_parser("plan", help="offline phase only: print plan and subtasks")
    pl.add_argument("scenario")
    pl.add_argument("--seed", type=int, default=None)
    pl.add_argument("--samples", type=int, default=None)

    c = sub.add_parser("check", help="evaluate a formula on a lasso word with both deciders")
    c.add_argument("formula")
    c.add_argument("prefix", help="symbols such as '{a,b} {} {c}'")
    c.add_argument("cycle", help="nonempty symbol sequence")

    v = sub.add_parser("validate", help="load a scenario and report problems")
    v.add_argument("scenario")
    return p


def _run_one(name: str, seed, samples, out, formats) -> tuple:
    sc = load_scenario(name)
    trace = sim.run(sc, seed=seed, n_samples=samples)
    lines = [f"{sc.name}: {trace.status} ({len(trace.ticks)} ticks, {len(trace.events)} events)"]
    if trace.message:
        lines.append(f"  {trace.message}")
    if out is not None:
        for path in sim.export(trace, out, formats):
            lines.append(f"  wrote {path}")
    return trace.status, "\n".join(lines)


def cmd_run(args) -> int:
    many = len(args.scenario) > 1
    jobs = [(n, args.seed, args.samples,
             None if args.out is None else (args.out / Path(n).stem if many else args.out), args.formats)
            for n in args.scenario]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_one, *zip(*jobs)))
    else:
        results = [_run_one(*j) for j in jobs]
    for _, text in results:
        print(text)
    return max(STATUS_CODES[s] for s, _ in results)


def cmd_plan(args) -> int:
    sc = load_scenario(args.scenario)
    params = sc.planner
    if args.seed is not None:
        params = replace(params, seed=args.seed)
    if args.samples is not None:
        params = replace(params, n_samples=args.samples)
    try:
        _, p, subtasks = sim.offline(sc, params)
    except NoPlanFound as e:
        print(f"{sc.name}: {sim.NO_PLAN}: {e}", file=sys.stderr)
        return EXIT_NO_PLAN
    sys.stdout.write(export_plan(p, subtasks))
    return EXIT_OK


def cmd_check(args) -> int:
    f = parse(args.formula)
    prefix, cycle = _symbols(args.prefix), _symbols(args.cycle)
    if not cycle:
        raise UsageError("cycle must contain at least one symbol")
    w = LassoWord(prefix, cycle)
    semantic = eval_lasso(f, w)
    automaton = accepts_lasso(translate(f), w)
    print(f"atoms: {','.join(sorted(atoms(f))) or '-'}")
    print(f"semantics: {str(semantic).lower()}")
    print(f"automaton: {str(automaton).lower()}")
    if semantic != automaton:
        print("MISMATCH", file=sys.stderr)
        return EXIT_INCOMPLETE
    return EXIT_OK


def cmd_validate(args) -> int:
    sc = load_scenario(args.scenario)
    print(f"{sc.name}: ok ({len(sc.workspace.regions)} regions, {len(sc.objects)} objects, "
          f"{sc.sim.n_ticks} ticks)")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "plan": cmd_plan, "check": cmd_check, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"ltlnav: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as e:
        print(f"ltlnav: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"ltlnav: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
