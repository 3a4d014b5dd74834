"""Random clause sets and a CSV harness for timing the solver on them."""

from __future__ import annotations

import csv
import io
import json
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence, Union

from .formula import (
    And, Clause, ClauseSet, Const, Implies, Logic, Not, Or, Var, logics, parse, render_clauses,
)
from .solver import SolverConfig, Verdict, solve
from .translate import build_problem

OPERATORS = {
    "&": And, "|": Or, "->": Implies, "!": Not,
}
BOUND_STYLES = ("random", "1sat")
CSV_HEADER = ["id", "n_vars", "n_clauses", "logic", "verdict", "cert", "nodes", "wall_ms"]


def _split(token: str):
    op, suffix = token[:-1], token[-1]
    if op not in OPERATORS:
        raise ValueError(f"unknown connective {token!r}")
    return OPERATORS[op], Logic(suffix)


def logic_weights(logic: Union[Logic, str], unary: float = 0.5) -> dict[str, float]:
    """Equal weight on the binary connectives of one logic, less on negation."""
    s = Logic(logic).value if isinstance(logic, str) else logic.value
    return {f"&{s}": 1.0, f"|{s}": 1.0, f"->{s}": 1.0, f"!{s}": unary}


@dataclass
class GenSpec:
    seed: int = 42
    count: int = 10
    n: int = 4
    depth: int = 3
    weights: dict = field(default_factory=lambda: {"&p": 1.0, "|p": 1.0, "->p": 1.0, "!p": 0.5})
    bounds: str = "random"
    clauses: int = 1
    const_prob: float = 0.05
    leaf_prob: float = 0.2

    def __post_init__(self):
        if self.n < 1 or self.depth < 1 or self.count < 0 or self.clauses < 1:
            raise ValueError("n, depth and clauses must be at least 1 and count non-negative")
        if any(w < 0 for w in self.weights.values()) or sum(self.weights.values()) <= 0:
            raise ValueError("connective weights must be non-negative with a positive sum")
        for token in self.weights:
            _split(token)
        if self.bounds not in BOUND_STYLES:
            raise ValueError(f"bound style must be one of {BOUND_STYLES}")
        if not (0 <= self.const_prob <= 1 and 0 <= self.leaf_prob < 1):
            raise ValueError("probabilities must lie in [0, 1]")

    @classmethod
    def from_json(cls, text: str) -> "GenSpec":
        data = json.loads(text)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown GenSpec fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "GenSpec":
        return cls.from_json(Path(path).read_text())

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _grid(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(0, 100), 100)


def _formula(spec: GenSpec, rng: random.Random, names, tokens, weights, d: int):
    # the root is always a connective, deeper nodes may stop early
    if d == 0 or (d < spec.depth and rng.random() < spec.leaf_prob):
        if rng.random() < spec.const_prob:
            return Const(_grid(rng))
        return Var(rng.choice(names))
    op, logic = _split(rng.choices(tokens, weights)[0])
    if op is Not:
        return Not(logic, _formula(spec, rng, names, tokens, weights, d - 1))
    lhs = _formula(spec, rng, names, tokens, weights, d - 1)
    rhs = _formula(spec, rng, names, tokens, weights, d - 1)
    return op(logic, lhs, rhs)


def generate(spec: GenSpec) -> list[ClauseSet]:
    """``spec.count`` clause sets, identical for identical specs."""
    rng = random.Random(spec.seed)
    names = [f"x{i + 1}" for i in range(spec.n)]
    tokens = sorted(spec.weights)
    weights = [spec.weights[t] for t in tokens]
    out = []
    for _ in range(spec.count):
        clauses = []
        for _ in range(spec.clauses):
            body = _formula(spec, rng, names, tokens, weights, spec.depth)
            if spec.bounds == "1sat":
                lo = hi = Fraction(1)
            else:
                lo, hi = sorted((_grid(rng), _grid(rng)))
            clauses.append(Clause(lo, body, hi))
        out.append(ClauseSet(tuple(clauses)))
    return out


def write_instances(instances: Sequence[ClauseSet], directory, prefix: str = "inst") -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, clauses in enumerate(instances):
        path = directory / f"{prefix}{i:04d}.fz"
        path.write_text(render_clauses(clauses))
        paths.append(path)
    return paths


def load_instances(paths: Iterable) -> list[tuple[str, ClauseSet]]:
    return [(Path(p).stem, parse(Path(p).read_text())) for p in paths]


def logic_label(clauses: ClauseSet) -> str:
    used = set()
    for c in clauses:
        used |= logics(c.body)
    return "".join(sorted(l.value for l in used)) or "-"


def _solve_one(item) -> tuple[Verdict, float]:
    clauses, cfg = item
    start = time.perf_counter()
    try:
        verdict = solve(build_problem(clauses), clauses, cfg)
    except Exception as exc:  # a failing instance must not stop the suite
        verdict = Verdict.unknown(f"error: {exc}")
    return verdict, (time.perf_counter() - start) * 1000


def solve_all(instances: Sequence[ClauseSet], cfg: SolverConfig = SolverConfig()) -> list[tuple[Verdict, float]]:
    """Verdicts and wall times in instance order."""
    items = [(c, cfg) for c in instances]
    if cfg.threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(_solve_one, items))
    return [_solve_one(item) for item in items]


def run_suite(instances, cfg: SolverConfig = SolverConfig(), out=None) -> str:
    """CSV with one row per instance and a closing summary row.

    ``instances`` holds clause sets or ``(id, clause set)`` pairs.  Returns
    the CSV text and also writes it to ``out`` (path or stream) if given.
    """
    pairs = [item if isinstance(item, tuple) else (f"inst{i:04d}", item)
             for i, item in enumerate(instances)]
    results = solve_all([c for _, c in pairs], cfg)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    counts = {"SAT": 0, "UNSAT": 0, "UNKNOWN": 0}
    for (name, clauses), (verdict, ms) in zip(pairs, results):
        counts[verdict.status] += 1
        writer.writerow([
            name, len(clauses.vocabulary), len(clauses), logic_label(clauses),
            verdict.status, verdict.cert or "", verdict.stats.nodes, f"{ms:.3f}",
        ])
    if pairs:
        summary = " ".join(f"{k}={v}" for k, v in counts.items())
        writer.writerow(["summary", "", len(pairs), "", summary, "", "", ""])
    text = buf.getvalue()
    if out is not None:
        if hasattr(out, "write"):
            out.write(text)
        else:
            Path(out).write_text(text)
    return text
