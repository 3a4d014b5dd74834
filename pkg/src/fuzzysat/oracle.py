"""Slow, independent decision procedures for cross-checking on small inputs.

Nothing here uses the interval engine in ``solver``: the grid search prunes
with exact rational enclosures of the formulas themselves (every connective
is monotone in each argument), and the assignment enumerator works by exact
equation solving over the translated constraints.  For clause sets in
Lukasiewicz and Goedel logic only, or in product logic only, the grid search
sweeps whole blocks of points at once (see ``_sweep_mode``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np

from .formula import (
    ONE, ZERO, And, ClauseSet, Const, Formula, Implies, Logic, Not, Or, Var, eval_clause, logics,
    subformulas, t_and, t_implies, t_not, t_or,
)
from .translate import Problem

import gmpy2
from gmpy2 import mpq, mpz

NUMERIC_TOL = Fraction(1, 10 ** 9)


class CapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    k: int = 16
    variable_cap: int = 8

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("grid denominator must be at least 1")


def enclosure(phi: Formula, box: Mapping[str, tuple]) -> tuple[Fraction, Fraction]:
    """Exact bounds on ``phi`` over a box of variable ranges."""
    if isinstance(phi, Var):
        return box[phi.name]
    if isinstance(phi, Const):
        return phi.value, phi.value
    if isinstance(phi, Not):
        lo, hi = enclosure(phi.sub, box)
        return t_not(phi.logic, hi), t_not(phi.logic, lo)
    alo, ahi = enclosure(phi.lhs, box)
    blo, bhi = enclosure(phi.rhs, box)
    if isinstance(phi, And):
        return t_and(phi.logic, alo, blo), t_and(phi.logic, ahi, bhi)
    if isinstance(phi, Or):
        return t_or(phi.logic, alo, blo), t_or(phi.logic, ahi, bhi)
    return t_implies(phi.logic, ahi, blo), t_implies(phi.logic, alo, bhi)


def grid_search(clauses: ClauseSet, g: GridSpec = GridSpec()) -> Optional[dict]:
    """First valuation on the grid {0, 1/k, ..., 1} satisfying every clause.

    Valuations are ordered lexicographically with variables sorted by name.
    A miss proves nothing about off-grid valuations.
    """
    names = sorted(clauses.vocabulary)
    if len(names) > g.variable_cap:
        raise CapExceeded(f"{len(names)} variables exceed the grid cap of {g.variable_cap}")
    grid = [Fraction(i, g.k) for i in range(g.k + 1)]
    box = {name: (ZERO, ONE) for name in names}
    mode = _sweep_mode(clauses, g.k)
    # trailing variables swept as one vectorised block when the connectives allow it
    m = 0
    if mode is not None:
        while m < len(names) and (g.k + 1) ** (m + 1) <= _BLOCK:
            m += 1
    head = names[:len(names) - m]

    def consistent() -> bool:
        for c in clauses:
            lo, hi = enclosure(c.body, box)
            if hi < c.lower or lo > c.upper:
                return False
        return True

    def dfs(i: int) -> Optional[dict]:
        if i == len(head):
            if m:
                return _sweep(clauses, names, box, m, g.k, mode)
            point = {n: box[n][0] for n in names}
            return point if all(eval_clause(point, c) for c in clauses) else None
        name = head[i]
        for q in grid:
            box[name] = (q, q)
            if consistent():
                found = dfs(i + 1)
                if found is not None:
                    return found
        box[name] = (ZERO, ONE)
        return None

    witness = dfs(0) if consistent() else None
    if witness is not None:
        assert all(eval_clause(witness, c) for c in clauses)
    return witness


_BLOCK = 300_000
_SCALABLE = frozenset((Logic.LUKASIEWICZ, Logic.GOEDEL))
_FLOAT_SLACK = 1e-9


def _sweep_mode(clauses: ClauseSet, k: int):
    """How blocks of grid points can be evaluated, or ``None``.

    ``("int", D)``: Lukasiewicz and Goedel connectives map multiples of
    ``1/D`` to multiples of ``1/D``, so scaled values are exact integers.
    ``("float", None)``: product connectives are continuous on [0, 1] apart
    from negation at 0, and a float product value is 0 exactly when the
    rational one is; float values are then within rounding of the exact
    ones and serve as a filter ahead of an exact check.
    """
    used = frozenset().union(*(logics(c.body) for c in clauses))
    if used <= _SCALABLE:
        D = k
        for c in clauses:
            for q in (c.lower, c.upper):
                D = math.lcm(D, q.denominator)
            for _, node in subformulas(c.body):
                if isinstance(node, Const):
                    D = math.lcm(D, node.value.denominator)
        return "int", D
    if used == {Logic.PRODUCT}:
        return "float", None
    return None


def _scaled(phi: Formula, cols: Mapping[str, np.ndarray], D: int):
    # values times D, exactly, for Lukasiewicz and Goedel connectives
    if isinstance(phi, Var):
        return cols[phi.name]
    if isinstance(phi, Const):
        return np.int64(int(phi.value * D))
    if isinstance(phi, Not):
        x = _scaled(phi.sub, cols, D)
        return D - x if phi.logic is Logic.LUKASIEWICZ else np.where(x == 0, D, 0)
    x, y = _scaled(phi.lhs, cols, D), _scaled(phi.rhs, cols, D)
    luk = phi.logic is Logic.LUKASIEWICZ
    if isinstance(phi, And):
        return np.maximum(0, x + y - D) if luk else np.minimum(x, y)
    if isinstance(phi, Or):
        return np.minimum(D, x + y) if luk else np.maximum(x, y)
    return np.minimum(D, D - x + y) if luk else np.where(x <= y, D, y)


def _product(phi: Formula, cols: Mapping[str, np.ndarray]):
    # float values of a product-logic formula; zero exactly where the true value is
    if isinstance(phi, Var):
        return cols[phi.name]
    if isinstance(phi, Const):
        return float(phi.value)
    if isinstance(phi, Not):
        return np.where(_product(phi.sub, cols) == 0, 1.0, 0.0)
    x, y = _product(phi.lhs, cols), _product(phi.rhs, cols)
    if isinstance(phi, And):
        return x * y
    if isinstance(phi, Or):
        return x + y * (1 - x)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x <= y, 1.0, y / np.where(x == 0, 1.0, x))


def _sweep(clauses: ClauseSet, names, box, m: int, k: int, mode) -> Optional[dict]:
    """First point of the block spanned by the last ``m`` variables."""
    kind, D = mode
    head, tail = names[:len(names) - m], names[len(names) - m:]
    idx = np.indices((k + 1,) * m, dtype=np.int64).reshape(m, -1)
    ok = np.ones(idx.shape[1], dtype=bool)
    if kind == "int":
        cols = {n: idx[j] * (D // k) for j, n in enumerate(tail)}
        cols.update((n, np.int64(int(box[n][0] * D))) for n in head)
        for c in clauses:
            value = _scaled(c.body, cols, D)
            ok &= (value >= int(c.lower * D)) & (value <= int(c.upper * D))
    else:
        cols = {n: idx[j] / k for j, n in enumerate(tail)}
        cols.update((n, float(box[n][0])) for n in head)
        for c in clauses:
            value = _product(c.body, cols)
            ok &= (value >= float(c.lower) - _FLOAT_SLACK) & (value <= float(c.upper) + _FLOAT_SLACK)
    point = {n: box[n][0] for n in head}
    for hit in np.flatnonzero(ok):
        point.update({n: Fraction(int(idx[j, hit]), k) for j, n in enumerate(tail)})
        if kind == "int" or all(eval_clause(point, c) for c in clauses):
            return point
    return None


# -- feasible and optimal assignments ---------------------------------------

def _exact_sqrt(q) -> Optional[mpq]:
    n, d = mpz(q.numerator), mpz(q.denominator)
    if gmpy2.is_square(n) and gmpy2.is_square(d):
        return mpq(gmpy2.isqrt(n), gmpy2.isqrt(d))
    return None


_NUM_TOL = mpq(1, 10 ** 9)
_ZERO, _ONE = mpq(0), mpq(1)


class _Enumerator:
    """Depth-first enumeration with exact propagation and an undo trail.

    Branching prefers an indicator whose equation would then fix its output
    variable; otherwise the lowest-numbered free continuous variable is
    sampled on the grid.
    """

    def __init__(self, problem: Problem, resolution: int, fixed: Mapping[int, Fraction]):
        self.problem = problem
        self.n = len(problem.vars)
        self.grid = [mpq(i, resolution) for i in range(resolution + 1)]
        self.lb = [mpq(ref.lb) for ref in problem.vars]
        self.ub = [mpq(ref.ub) for ref in problem.vars]
        self.binary = [ref.is_binary for ref in problem.vars]
        self.cons = []
        self.watch = [[] for _ in range(self.n)]
        for k, con in enumerate(problem.constraints):
            lin = tuple((mpq(c), v) for c, v in con.linear)
            bil = tuple((mpq(c), v, w) for c, v, w in con.bilinear)
            self.cons.append((lin, bil, mpq(con.constant), con.relation))
            for v in sorted(con.variables()):
                self.watch[v].append(k)
        self.equalities = [
            (k, con) for k, con in enumerate(self.cons) if con[3] == "="
        ]
        self.vals: list = [None] * self.n
        self.fixed = {v: mpq(q) for v, q in fixed.items()}
        self.found: list[tuple[list, bool]] = []

    def _reduce(self, con):
        """Collapse a constraint onto its unknowns: ``(a, b, c, unknown)`` or ``None``.

        ``None`` means two or more unknowns remain.
        """
        vals = self.vals
        lin, bil, c, _ = con
        a = b = _ZERO
        unknown = None
        for coef, v in lin:
            x = vals[v]
            if x is not None:
                c += coef * x
            elif unknown is None or unknown == v:
                unknown = v
                b += coef
            else:
                return None
        for coef, v, w in bil:
            xv, xw = vals[v], vals[w]
            if xv is not None and xw is not None:
                c += coef * xv * xw
            elif xv is not None or xw is not None:
                other, known = (w, xv) if xv is not None else (v, xw)
                if unknown is not None and unknown != other:
                    return None
                unknown = other
                b += coef * known
            elif v == w and (unknown is None or unknown == v):
                unknown = v
                a += coef
            else:
                return None
        return a, b, c, unknown

    @staticmethod
    def _holds(total, rel, tol) -> bool:
        if rel == "=":
            return abs(total) <= tol
        if rel == "<=":
            return total <= tol
        return total >= -tol

    def _roots(self, a, b, c):
        """Real roots of ``a u^2 + b u + c``; ``None`` when any value works."""
        if a == 0:
            if b == 0:
                return (None, True) if c == 0 else ([], True)
            return [-c / b], True
        disc = b * b - 4 * a * c
        if disc < 0:
            return [], True
        s = _exact_sqrt(disc)
        exact = s is not None
        if s is None:
            s = mpq(Fraction(math.sqrt(disc)))
        return sorted({(-b - s) / (2 * a), (-b + s) / (2 * a)}), exact

    def propagate(self, queue, trail, numeric):
        """Returns ``(ok, numeric, choice)``; ``choice`` is ``(var, roots)`` to branch on."""
        vals = self.vals
        tol = _NUM_TOL if numeric else _ZERO
        seen = set(queue)
        while queue:
            k = queue.pop()
            seen.discard(k)
            con = self.cons[k]
            red = self._reduce(con)
            if red is None:
                continue
            a, b, c, u = red
            rel = con[3]
            if u is None:
                if not self._holds(c, rel, tol):
                    return False, numeric, None
                continue
            if rel != "=":
                continue
            roots, exact = self._roots(a, b, c)
            if roots is None:
                continue
            lb, ub = self.lb[u], self.ub[u]
            slack = _ZERO if exact else _NUM_TOL
            roots = [min(max(r, lb), ub) for r in roots if lb - slack <= r <= ub + slack]
            if self.binary[u]:
                roots = [r for r in roots if r == 0 or r == 1]
            if not roots:
                return False, numeric, None
            if not exact:
                numeric, tol = True, _NUM_TOL
            if len(roots) == 2 and roots[0] != roots[1]:
                return True, numeric, (u, roots)
            vals[u] = roots[0]
            trail.append(u)
            for dep in self.watch[u]:
                if dep not in seen:
                    seen.add(dep)
                    queue.append(dep)
        return True, numeric, None

    def pick(self):
        vals = self.vals
        for k, con in self.equalities:
            lin, bil, _, _ = con
            unknown = [v for v in self._vars(con) if vals[v] is None]
            if len(unknown) == 2:
                bins = [v for v in unknown if self.binary[v]]
                if len(bins) == 1:
                    return bins[0]
        for v in range(self.n):
            if vals[v] is None and not self.binary[v]:
                return v
        for v in range(self.n):
            if vals[v] is None:
                return v
        return None

    @staticmethod
    def _vars(con):
        lin, bil, _, _ = con
        out = {v for _, v in lin}
        for _, v, w in bil:
            out.add(v)
            out.add(w)
        return out

    def assign(self, v, value, numeric):
        trail = [v]
        self.vals[v] = value
        ok, numeric, choice = self.propagate(list(self.watch[v]), trail, numeric)
        if ok:
            self.dfs(numeric, choice)
        for u in trail:
            self.vals[u] = None

    def dfs(self, numeric, choice=None):
        if choice is not None:
            var, roots = choice
            for r in roots:
                self.assign(var, r, numeric)
            return
        v = self.pick()
        if v is None:
            self.found.append((list(self.vals), numeric))
            return
        if self.binary[v]:
            values = (_ZERO, _ONE)
        else:
            values = [q for q in self.grid if self.lb[v] <= q <= self.ub[v]]
        for q in values:
            self.assign(v, q, numeric)

    def run(self):
        trail = []
        for v, q in self.fixed.items():
            self.vals[v] = q
            trail.append(v)
        ok, numeric, choice = self.propagate(list(range(len(self.cons))), trail, False)
        if ok:
            self.dfs(numeric, choice)
        return self.found


def enumerate_feasible(problem: Problem, resolution: int = 4,
                       fixed: Optional[Mapping[str, Fraction]] = None,
                       max_binaries: int = 8, max_continuous: int = 10) -> list[tuple[dict, bool]]:
    """Feasible assignments found by grid sampling plus exact equation solving.

    Returns ``(assignment, numeric)`` pairs with assignments keyed by variable
    name; ``numeric`` marks points located through an irrational root, which
    satisfy the constraints only to within 1e-9.
    """
    fixed_ids = {problem.names[k]: Fraction(v) for k, v in (fixed or {}).items()}
    n_bin = sum(ref.is_binary for ref in problem.vars)
    n_cont = sum(not ref.is_binary and ref.id not in fixed_ids for ref in problem.vars)
    if n_bin > max_binaries or n_cont > max_continuous:
        raise CapExceeded(f"{n_bin} binaries / {n_cont} continuous variables exceed the oracle cap")
    names = [ref.name for ref in problem.vars]
    return [
        ({name: Fraction(int(q.numerator), int(q.denominator)) for name, q in zip(names, vals)}, numeric)
        for vals, numeric in _Enumerator(problem, resolution, fixed_ids).run()
    ]


def indicator_guards(problem: Problem) -> dict[str, tuple]:
    """Guard ``g`` of each minimised binary ``b`` (from its constraint ``b >= g``)."""
    guards = {}
    for con in problem.constraints:
        if con.relation != ">=" or con.bilinear:
            continue
        for coef, v in con.linear:
            name = problem.vars[v].name
            if coef == 1 and v in problem.minimize and name not in guards:
                guards[name] = (
                    [(-c, problem.vars[w].name) for c, w in con.linear if w != v],
                    -con.constant,
                )
                break
    return guards


def objective(problem: Problem, f: Mapping[str, Fraction]) -> Fraction:
    return sum((f[problem.vars[i].name] for i in problem.minimize), ZERO)


def is_indicator_minimal(problem: Problem, f: Mapping[str, Fraction], guards=None) -> bool:
    """Every set indicator has a strictly positive guard."""
    guards = indicator_guards(problem) if guards is None else guards
    for b, (lin, const) in guards.items():
        if f[b] == 1 and const + sum(c * f[v] for c, v in lin) <= 0:
            return False
    return True


def enumerate_optimal(problem: Problem, resolution: int = 4, criterion: str = "sum",
                      fixed: Optional[Mapping[str, Fraction]] = None) -> list[tuple[dict, bool]]:
    """Optimal assignments among the enumerated feasible ones.

    ``criterion="sum"`` keeps the assignments of least total indicator value.
    ``criterion="indicator"`` keeps those in which no indicator could be
    lowered on its own, i.e. each set indicator has a strictly positive guard.
    """
    feasible = enumerate_feasible(problem, resolution, fixed)
    if criterion == "sum":
        if not feasible:
            return []
        best = min(objective(problem, f) for f, _ in feasible)
        return [(f, num) for f, num in feasible if objective(problem, f) == best]
    if criterion == "indicator":
        guards = indicator_guards(problem)
        return [(f, num) for f, num in feasible if is_indicator_minimal(problem, f, guards)]
    raise ValueError(f"unknown optimality criterion {criterion!r}")
