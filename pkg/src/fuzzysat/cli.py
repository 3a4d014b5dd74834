"""Command-line entry point.

Exit codes follow the usual SAT-solver convention: 10 SAT, 20 UNSAT,
30 UNKNOWN, 1 for usage errors and 2 for unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import bench, interop
from .formula import ParseError, parse
from .oracle import CapExceeded, GridSpec, grid_search
from .solver import SAT, UNKNOWN, UNSAT, SolverConfig, run_backend, verify_model
from .translate import build_problem

EXIT = {SAT: 10, UNSAT: 20, UNKNOWN: 30}
USAGE, INPUT = 1, 2


def _pq(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive(text: str) -> float:
    try:
        value = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _count(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1: {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fuzzysat", description="Satisfiability of fuzzy clause sets.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("solve", help="decide a clause set")
    s.add_argument("file")
    s.add_argument("--backend", default="native",
                   help="native, export, or external:CMD (default native)")
    s.add_argument("--epsilon", type=_positive, default=1e-9)
    s.add_argument("--delta", type=_positive, default=1e-6)
    s.add_argument("--threads", type=_count, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--timeout", type=_positive, default=10.0)
    s.add_argument("--model", action="store_true", help="print the satisfying valuation")
    s.add_argument("--stats", action="store_true", help="print search statistics")
    s.add_argument("--json", action="store_true", help="print the verdict as JSON after the status line")
    s.add_argument("--trust-external-unsat", action="store_true")
    s.add_argument("-o", "--output", help="model path for --backend export")

    e = sub.add_parser("export", help="write the translated model")
    e.add_argument("file")
    e.add_argument("-o", "--output", required=True)
    e.add_argument("--rewrite", action="store_true", help="express Lukasiewicz connectives by implication")

    c = sub.add_parser("check", help="search a rational grid for a witness")
    c.add_argument("file")
    c.add_argument("--grid", type=_count, default=16)
    c.add_argument("--cap", type=_count, default=8, help="largest number of variables")

    v = sub.add_parser("verify-model", help="check a valuation exactly")
    v.add_argument("file")
    v.add_argument("model")

    b = sub.add_parser("bench", help="generate instances and time the solver")
    b.add_argument("--spec", required=True)
    b.add_argument("--csv", required=True)
    b.add_argument("--timeout", type=_positive, default=10.0)
    b.add_argument("--threads", type=_count, default=1)
    b.add_argument("--instances", help="directory to also write the instances to")
    return p


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _clauses(path: str):
    try:
        return parse(_read(path))
    except (ParseError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def read_valuation(text: str) -> dict:
    """Parse ``assign <var> <rational>`` lines; a leading status line is allowed."""
    v = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line or line in (SAT, UNSAT, UNKNOWN):
            continue
        toks = line.split()
        if len(toks) != 3 or toks[0] != "assign":
            raise InputError(f"model line {n}: expected 'assign <var> <value>'")
        try:
            value = Fraction(toks[2])
        except (ValueError, ZeroDivisionError):
            raise InputError(f"model line {n}: bad value {toks[2]!r}") from None
        if toks[1] in v:
            raise InputError(f"model line {n}: {toks[1]} assigned twice")
        v[toks[1]] = value
    return v


def _solve(args, out) -> int:
    clauses = _clauses(args.file)
    cfg = SolverConfig(epsilon=args.epsilon, delta=args.delta, threads=args.threads,
                       seed=args.seed, time_budget=args.timeout)
    if not (args.backend in ("native", "export") or args.backend.startswith("external:")):
        raise UsageError(f"unknown backend {args.backend!r}")
    dest = args.output
    if args.backend == "export" and dest is None:
        dest = str(Path(args.file).with_suffix(".fmp"))
    verdict = run_backend(build_problem(clauses), clauses, cfg, backend=args.backend, dest=dest,
                          timeout=args.timeout, trust_external_unsat=args.trust_external_unsat)
    print(verdict.status, file=out)
    if args.model and verdict.model is not None:
        for name, value in verdict.model.items():
            print(f"assign {name} {_pq(value)}", file=out)
    if args.stats:
        st = verdict.stats
        print(f"stat nodes {st.nodes}", file=out)
        print(f"stat refuted {st.refuted}", file=out)
        print(f"stat wall_ms {st.wall_ms:.3f}", file=out)
        if verdict.cert:
            print(f"stat cert {verdict.cert}", file=out)
        if verdict.reason:
            print(f"stat reason {verdict.reason}", file=out)
    if args.json:
        print(verdict.to_json(), file=out)
    return EXIT[verdict.status]


def _export(args, out) -> int:
    clauses = _clauses(args.file)
    try:
        interop.write_model(build_problem(clauses, rewrite=args.rewrite), args.output)
    except OSError as exc:
        raise InputError(f"cannot write {args.output}: {exc.strerror or exc}") from None
    return 0


def _check(args, out) -> int:
    clauses = _clauses(args.file)
    try:
        witness = grid_search(clauses, GridSpec(k=args.grid, variable_cap=args.cap))
    except CapExceeded as exc:
        raise InputError(str(exc)) from None
    if witness is None:
        print(UNKNOWN, file=out)
        print(f"no witness on the grid 1/{args.grid}", file=out)
        return EXIT[UNKNOWN]
    print(SAT, file=out)
    for name, value in witness.items():
        print(f"assign {name} {_pq(value)}", file=out)
    return EXIT[SAT]


def _verify(args, out) -> int:
    clauses = _clauses(args.file)
    v = read_valuation(_read(args.model))
    missing = sorted(clauses.vocabulary - set(v))
    if missing:
        print(f"not certified: unassigned {' '.join(missing)}", file=out)
        return 1
    if verify_model(clauses, v):
        print("certified", file=out)
        return 0
    print("not certified", file=out)
    return 1


def _bench(args, out) -> int:
    try:
        spec = bench.GenSpec.from_json(_read(args.spec))
    except (ValueError, TypeError) as exc:
        raise InputError(f"{args.spec}: {exc}") from None
    instances = bench.generate(spec)
    if args.instances:
        bench.write_instances(instances, args.instances)
    cfg = SolverConfig(time_budget=args.timeout, threads=args.threads, seed=spec.seed)
    try:
        bench.run_suite(instances, cfg, out=args.csv)
    except OSError as exc:
        raise InputError(f"cannot write {args.csv}: {exc.strerror or exc}") from None
    return 0


COMMANDS = {"solve": _solve, "export": _export, "check": _check,
            "verify-model": _verify, "bench": _bench}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT


if __name__ == "__main__":
    sys.exit(main())
