"""The ``.fmp`` model format and the stdout protocol for external solvers.

A model file holds one item per line::

    fmp 1
    var <name> <cont|int> <lb> <ub>
    obj min [<name> (+ <name>)*]
    lin <term> (+ <term>)* <le|ge|eq> <rat>
    quad <term> (+ <term>)* <le|ge|eq> <rat>

Terms are ``rat*var`` or ``rat*var*var`` and every rational is written
``p/q``.  The reader also accepts ``<=``, ``>=`` and ``=`` as relations and
terms without ``+`` separators.  Blank lines and ``#`` comments are ignored.

An adapter is any program run as ``cmd <modelpath>`` that prints
``status FEASIBLE|INFEASIBLE|UNKNOWN`` followed by ``assign <var> <number>``
lines.
"""

from __future__ import annotations

import io
import os
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Union

from .translate import BINARY, CONTINUOUS, Constraint, Poly, Problem, VarRef

VERSION = "1"

_REL_OUT = {"<=": "le", ">=": "ge", "=": "eq"}
_REL_IN = {"le": "<=", "ge": ">=", "eq": "=", "<=": "<=", ">=": ">=", "=": "=", "==": "="}
_RAT = re.compile(r"[+-]?\d+(/\d+)?$")


class ModelError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _rat(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def _term(c: Fraction, names) -> str:
    return "*".join([_rat(c)] + list(names))


def dumps(problem: Problem) -> str:
    """Text of the model; identical problems give identical bytes."""
    name = {ref.id: ref.name for ref in problem.vars}
    lines = [f"fmp {VERSION}"]
    for ref in sorted(problem.vars, key=lambda r: r.id):
        lines.append(f"var {ref.name} {ref.kind} {_rat(ref.lb)} {_rat(ref.ub)}")
    lines.append(" ".join(["obj min", " + ".join(name[i] for i in sorted(problem.minimize))]).rstrip())
    for con in problem.constraints:
        terms = [_term(c, [name[v]]) for c, v in con.linear]
        terms += [_term(c, [name[v], name[w]]) for c, v, w in con.bilinear]
        kind = "quad" if con.bilinear else "lin"
        lhs = " + ".join(terms) if terms else "0/1"
        lines.append(f"{kind} {lhs} {_REL_OUT[con.relation]} {_rat(-con.constant)}")
    return "\n".join(lines) + "\n"


def write_model(problem: Problem, dest) -> str:
    """Write the model to a path or text stream and return its text."""
    text = dumps(problem)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)
    return text


def _parse_rat(tok: str, lineno: int) -> Fraction:
    if not _RAT.match(tok):
        raise ModelError(lineno, f"expected a rational, got {tok!r}")
    try:
        return Fraction(tok)
    except ZeroDivisionError:
        raise ModelError(lineno, f"zero denominator in {tok!r}") from None


def loads(text: str) -> Problem:
    """Inverse of :func:`dumps`."""
    vars_: list[VarRef] = []
    ids: dict[str, int] = {}
    minimize: set[int] = set()
    cons: list[Constraint] = []
    seen_header = seen_obj = False

    def lookup(tok: str, lineno: int) -> int:
        if tok not in ids:
            raise ModelError(lineno, f"unknown variable {tok!r}")
        return ids[tok]

    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        head = toks[0]
        if not seen_header:
            if head != "fmp" or len(toks) != 2:
                raise ModelError(lineno, "missing 'fmp' header")
            if toks[1] != VERSION:
                raise ModelError(lineno, f"unsupported format version {toks[1]!r}")
            seen_header = True
        elif head == "var":
            if len(toks) != 5:
                raise ModelError(lineno, "expected 'var <name> <cont|int> <lb> <ub>'")
            _, name, kind, lb, ub = toks
            if name in ids:
                raise ModelError(lineno, f"variable {name!r} declared twice")
            if kind not in (CONTINUOUS, BINARY):
                raise ModelError(lineno, f"unknown variable kind {kind!r}")
            if cons or seen_obj:
                raise ModelError(lineno, "variable declared after use")
            ids[name] = len(vars_)
            vars_.append(VarRef(len(vars_), name, kind, _parse_rat(lb, lineno), _parse_rat(ub, lineno)))
        elif head == "obj":
            if len(toks) < 2 or toks[1] != "min":
                raise ModelError(lineno, "expected 'obj min ...'")
            if seen_obj:
                raise ModelError(lineno, "objective given twice")
            seen_obj = True
            minimize |= {lookup(t, lineno) for t in toks[2:] if t != "+"}
        elif head in ("lin", "quad"):
            if len(toks) < 4:
                raise ModelError(lineno, "constraint needs terms, a relation and a right-hand side")
            rel = _REL_IN.get(toks[-2])
            if rel is None:
                raise ModelError(lineno, f"unknown relation {toks[-2]!r}")
            poly = Poly()
            for tok in toks[1:-2]:
                if tok == "+":
                    continue
                parts = tok.split("*")
                if _RAT.match(parts[0]):
                    coef, names = _parse_rat(parts[0], lineno), parts[1:]
                else:
                    coef, names = Fraction(1), parts
                if len(names) > 2 or (head == "lin" and len(names) > 1):
                    raise ModelError(lineno, f"term {tok!r} has too high a degree")
                key = tuple(sorted(lookup(n, lineno) for n in names))
                poly = poly + Poly({key: coef})
            cons.append((poly - _parse_rat(toks[-1], lineno)).constraint(rel))
        else:
            raise ModelError(lineno, f"unknown item {head!r}")
    if not seen_header:
        raise ModelError(1, "missing 'fmp' header")

    origin = {ref.name.split("@", 1)[1]: ref.id for ref in vars_ if ref.name.startswith("x_phi@")}
    return Problem(
        vars=tuple(vars_),
        constraints=tuple(cons),
        integers=frozenset(ref.id for ref in vars_ if ref.is_binary),
        minimize=frozenset(minimize),
        origin=origin,
    )


def read_model(src) -> Problem:
    """Read a model from a path or text stream."""
    text = src.read() if hasattr(src, "read") else Path(src).read_text()
    return loads(text)


# -- external adapters ------------------------------------------------------

FEASIBLE, INFEASIBLE, UNKNOWN = "FEASIBLE", "INFEASIBLE", "UNKNOWN"


@dataclass
class ExternalResult:
    status: str
    assignments: dict = field(default_factory=dict)
    diagnostic: str = ""


def parse_adapter_output(stdout: str) -> ExternalResult:
    lines = [ln.strip() for ln in stdout.splitlines() if ln.strip()]
    bad = ExternalResult(UNKNOWN, {}, "adapter parse error")
    if not lines:
        return bad
    head = lines[0].split()
    if len(head) != 2 or head[0] != "status" or head[1] not in (FEASIBLE, INFEASIBLE, UNKNOWN):
        return bad
    assignments = {}
    for ln in lines[1:]:
        toks = ln.split()
        if len(toks) != 3 or toks[0] != "assign":
            return bad
        try:
            assignments[toks[1]] = Fraction(toks[2])
        except (ValueError, ZeroDivisionError):
            return bad
    return ExternalResult(head[1], assignments, "")


def call_external(cmd: str, model: Union[Problem, str, os.PathLike], timeout: float = 10.0) -> ExternalResult:
    """Run ``cmd <modelpath>`` and parse what it prints.

    ``model`` is a problem (written to a temporary file) or an existing path.
    Failures of any kind come back as ``UNKNOWN`` with a diagnostic.
    """
    argv = shlex.split(cmd)
    if not argv:
        return ExternalResult(UNKNOWN, {}, "empty adapter command")
    with tempfile.TemporaryDirectory(prefix="fmp-") as tmp:
        if isinstance(model, Problem):
            path = os.path.join(tmp, "model.fmp")
            write_model(model, path)
        else:
            path = os.fspath(model)
        try:
            proc = subprocess.run(argv + [path], capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            err = exc.stderr.decode() if isinstance(exc.stderr, bytes) else (exc.stderr or "")
            return ExternalResult(UNKNOWN, {}, f"adapter timed out after {timeout}s {err}".strip())
        except OSError as exc:
            return ExternalResult(UNKNOWN, {}, f"adapter failed to start: {exc}")
    if proc.returncode != 0:
        return ExternalResult(UNKNOWN, {}, f"adapter exited with {proc.returncode}: {proc.stderr.strip()}")
    return parse_adapter_output(proc.stdout)
