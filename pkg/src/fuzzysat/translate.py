"""Translation of clause sets into mixed-integer bilinear feasibility problems.

Every subformula occurrence gets a continuous variable ``x_phi@<path>`` in
[0, 1]; piecewise connectives additionally get an indicator binary
``b@<path>`` that selects the active case and is collected into the
minimised set.  Product implication also gets the quotient variable
``aux@<path>``.

Constraints are polynomials of degree at most two kept as sparse term lists::

    sum(c * x) + sum(c * x * y) + constant  (<= | >= | =)  0
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .formula import (
    ONE, ZERO, And, ClauseSet, Const, Formula, Implies, Logic, Not, Or, Valuation, Var,
    children, evaluate, sat_query, subformulas,
)

CONTINUOUS = "cont"
BINARY = "int"

L, P, G = Logic.LUKASIEWICZ, Logic.PRODUCT, Logic.GOEDEL


@dataclass(frozen=True)
class VarRef:
    id: int
    name: str
    kind: str = CONTINUOUS
    lb: Fraction = ZERO
    ub: Fraction = ONE

    @property
    def is_binary(self) -> bool:
        return self.kind == BINARY


@dataclass(frozen=True)
class Constraint:
    """``sum(linear) + sum(bilinear) + constant <relation> 0`` over variable ids."""

    linear: tuple[tuple[Fraction, int], ...]
    bilinear: tuple[tuple[Fraction, int, int], ...]
    constant: Fraction
    relation: str

    def variables(self) -> set[int]:
        out = {v for _, v in self.linear}
        for _, v, w in self.bilinear:
            out.update((v, w))
        return out

    def value(self, f: Mapping[int, Fraction]) -> Fraction:
        total = self.constant
        for c, v in self.linear:
            total += c * f[v]
        for c, v, w in self.bilinear:
            total += c * f[v] * f[w]
        return total

    def holds(self, f: Mapping[int, Fraction], tol=0) -> bool:
        r = self.value(f)
        if self.relation == "=":
            return abs(r) <= tol
        if self.relation == "<=":
            return r <= tol
        return r >= -tol

    def residual(self, f: Mapping[int, Fraction]) -> Fraction:
        """Amount by which ``f`` violates the constraint (0 when satisfied)."""
        r = self.value(f)
        if self.relation == "=":
            return abs(r)
        if self.relation == "<=":
            return max(r, ZERO)
        return max(-r, ZERO)

    def degree(self) -> int:
        return 2 if self.bilinear else (1 if self.linear else 0)


class Poly:
    """Degree-two polynomial used only to assemble constraints."""

    def __init__(self, terms=None):
        self.terms: dict[tuple, Fraction] = dict(terms or {})

    @classmethod
    def var(cls, ref: VarRef) -> "Poly":
        return cls({(ref.id,): ONE})

    @classmethod
    def const(cls, value) -> "Poly":
        return cls({(): Fraction(value)})

    @staticmethod
    def _lift(other) -> "Poly":
        return other if isinstance(other, Poly) else Poly.const(other)

    def __add__(self, other):
        out = defaultdict(Fraction, self.terms)
        for key, c in self._lift(other).terms.items():
            out[key] += c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        out = defaultdict(Fraction)
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                key = tuple(sorted(k1 + k2))
                if len(key) > 2:
                    raise ValueError("constraint degree exceeds two")
                out[key] += c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def constraint(self, relation: str) -> Constraint:
        linear, bilinear, constant = [], [], ZERO
        for key, c in sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0])):
            if c == 0:
                continue
            if not key:
                constant = c
            elif len(key) == 1:
                linear.append((c, key[0]))
            else:
                bilinear.append((c, key[0], key[1]))
        return Constraint(tuple(linear), tuple(bilinear), constant, relation)

    def __le__(self, other):
        return (self - other).constraint("<=")

    def __ge__(self, other):
        return (self - other).constraint(">=")

    def eq(self, other) -> Constraint:
        return (self - other).constraint("=")


class Registry:
    """Allocates variables with deterministic, path-derived names."""

    def __init__(self, share: bool = False):
        self.vars: list[VarRef] = []
        self.by_name: dict[str, VarRef] = {}
        self.origin: dict[str, VarRef] = {}
        self.share = share
        self.memo: dict[Formula, VarRef] = {}

    def fresh(self, name: str, kind: str = CONTINUOUS) -> VarRef:
        if name in self.by_name:
            raise ValueError(f"variable {name!r} registered twice")
        ref = VarRef(len(self.vars), name, kind)
        self.vars.append(ref)
        self.by_name[name] = ref
        return ref

    def source(self, name: str) -> VarRef:
        return self.by_name.get(name) or self.fresh(name)


@dataclass
class MinlpPart:
    constraints: list[Constraint]
    integers: set[int]
    minimize: set[int]
    root: VarRef


def to_minlp(phi: Formula, reg: Registry, path: str = "0") -> MinlpPart:
    """Constraints, integer and minimised variables for one formula."""
    if isinstance(phi, Var):
        ref = reg.source(phi.name)
        reg.origin[path] = ref
        return MinlpPart([], set(), set(), ref)
    if reg.share and phi in reg.memo:
        reg.origin[path] = reg.memo[phi]
        return MinlpPart([], set(), set(), reg.memo[phi])

    parts = [to_minlp(sub, reg, f"{path}.{i}") for i, sub in enumerate(children(phi))]
    cons: list[Constraint] = []
    Z: set[int] = set()
    M: set[int] = set()
    for part in parts:
        cons += part.constraints
        Z |= part.integers
        M |= part.minimize

    x_phi = reg.fresh(f"x_phi@{path}")
    reg.origin[path] = x_phi
    if reg.share:
        reg.memo[phi] = x_phi
    out = Poly.var(x_phi)

    if isinstance(phi, Const):
        cons.append(out.eq(phi.value))
        return MinlpPart(cons, Z, M, x_phi)

    def indicator() -> Poly:
        b = reg.fresh(f"b@{path}", BINARY)
        Z.add(b.id)
        M.add(b.id)
        return Poly.var(b)

    x = Poly.var(parts[0].root)
    if isinstance(phi, Not):
        if phi.logic is L:
            cons.append(out.eq(1 - x))
        else:
            b = indicator()
            cons += [b >= x, out.eq(1 - b)]
        return MinlpPart(cons, Z, M, x_phi)

    y = Poly.var(parts[1].root)
    kind, logic = type(phi), phi.logic
    if kind is And and logic is P:
        cons.append(out.eq(x * y))
    elif kind is Or and logic is P:
        cons.append(out.eq(x + y - x * y))
    elif kind is Implies and logic is P:
        b = indicator()
        q = Poly.var(reg.fresh(f"aux@{path}"))
        cons += [b >= x - y, q <= b, (q * x).eq(b * y), out.eq(q * b + (1 - b))]
    elif kind is Implies and logic is L:
        b = indicator()
        cons += [b >= x - y, out.eq((1 - b) + b * (1 - x + y))]
    elif kind is And and logic is L:
        b = indicator()
        cons += [b >= x + y - 1, out.eq(b * (x + y - 1))]
    elif kind is Or and logic is L:
        b = indicator()
        cons += [b >= x + y - 1, out.eq(x + y - b * (x + y - 1))]
    elif kind is And and logic is G:
        b = indicator()
        cons += [b >= x - y, out.eq((1 - b) * x + b * y)]
    elif kind is Or and logic is G:
        b = indicator()
        cons += [b >= x - y, out.eq((1 - b) * y + b * x)]
    else:  # Goedel implication
        b = indicator()
        cons += [b >= x - y, out.eq((1 - b) + b * y)]
    return MinlpPart(cons, Z, M, x_phi)


def rewrite_lukasiewicz(phi: Formula) -> Formula:
    """Express Lukasiewicz connectives and the continuous Goedel ones via ``->l``.

    Goedel negation and implication are discontinuous, so no term built from
    ``->l`` and constants defines them; they are left untouched.
    """
    if isinstance(phi, (Var, Const)):
        return phi
    if isinstance(phi, Not):
        sub = rewrite_lukasiewicz(phi.sub)
        if phi.logic is L:
            return Implies(L, sub, Const(ZERO))
        return Not(phi.logic, sub)
    x, y = rewrite_lukasiewicz(phi.lhs), rewrite_lukasiewicz(phi.rhs)
    neg = lambda f: Implies(L, f, Const(ZERO))  # noqa: E731
    if isinstance(phi, And) and phi.logic is L:
        return neg(Implies(L, x, neg(y)))
    if isinstance(phi, Or) and phi.logic is L:
        return Implies(L, neg(x), y)
    if isinstance(phi, And) and phi.logic is G:
        return neg(Implies(L, x, neg(Implies(L, x, y))))
    if isinstance(phi, Or) and phi.logic is G:
        return Implies(L, Implies(L, x, y), y)
    return type(phi)(phi.logic, x, y)


@dataclass(frozen=True)
class Problem:
    vars: tuple[VarRef, ...]
    constraints: tuple[Constraint, ...]
    integers: frozenset[int]
    minimize: frozenset[int]
    origin: Mapping[str, int] = field(default_factory=dict, compare=False)
    roots: tuple[int, ...] = field(default=(), compare=False)

    def var(self, name: str) -> VarRef:
        for ref in self.vars:
            if ref.name == name:
                return ref
        raise KeyError(name)

    @property
    def names(self) -> dict[str, int]:
        return {ref.name: ref.id for ref in self.vars}

    @property
    def sources(self) -> dict[str, int]:
        """Fuzzy variables of the clause set: every name without an ``@`` tag."""
        return {ref.name: ref.id for ref in self.vars if "@" not in ref.name}

    def objective(self, f: Mapping[int, Fraction]) -> Fraction:
        return sum((f[i] for i in self.minimize), ZERO)

    def guards(self) -> dict[int, Constraint]:
        """For each minimised binary ``b``, its guard constraint ``b >= g``.

        Returned as the ``>=`` constraint itself; ``g`` is minus the non-``b``
        part of its left-hand side.
        """
        out = {}
        for con in self.constraints:
            if con.relation != ">=" or con.bilinear:
                continue
            for c, v in con.linear:
                if c == 1 and v in self.minimize and v not in out:
                    out[v] = con
                    break
        return out


def guard_terms(con: Constraint, b: int) -> tuple[tuple[tuple[Fraction, int], ...], Fraction]:
    """``(linear, constant)`` of the guard ``g`` in ``b >= g``."""
    return tuple((-c, v) for c, v in con.linear if v != b), -con.constant


def substitute(con: Constraint, values: Mapping[int, Fraction]) -> Constraint:
    """``con`` with the variables in ``values`` replaced by constants."""
    out = Poly.const(con.constant)
    for c, v in con.linear:
        out = out + c * (Poly.const(values[v]) if v in values else Poly({(v,): ONE}))
    for c, v, w in con.bilinear:
        pv = Poly.const(values[v]) if v in values else Poly({(v,): ONE})
        pw = Poly.const(values[w]) if w in values else Poly({(w,): ONE})
        out = out + c * pv * pw
    return out.constraint(con.relation)


def build_problem(clauses: ClauseSet, rewrite: bool = False, share: bool = False) -> Problem:
    """Union of per-clause translations plus the clause bound constraints."""
    if not len(clauses):
        raise ValueError("empty clause set")
    reg = Registry(share=share)
    cons: list[Constraint] = []
    Z: set[int] = set()
    M: set[int] = set()
    roots = []
    for i, clause in enumerate(clauses):
        body = rewrite_lukasiewicz(clause.body) if rewrite else clause.body
        part = to_minlp(body, reg, str(i))
        root = Poly.var(part.root)
        cons += part.constraints
        cons += [root >= clause.lower, root <= clause.upper]
        Z |= part.integers
        M |= part.minimize
        roots.append(part.root.id)
    return Problem(
        vars=tuple(reg.vars),
        constraints=tuple(cons),
        integers=frozenset(Z),
        minimize=frozenset(M),
        origin={p: ref.id for p, ref in reg.origin.items()},
        roots=tuple(roots),
    )


Assignment = dict  # variable name -> Fraction


def extend_valuation(target: Union[Formula, ClauseSet], v: Valuation, rewrite: bool = False) -> Assignment:
    """Extend a valuation to an assignment of every problem variable.

    Each ``x_phi`` receives the exact truth value of its subformula, each
    indicator the least value its guard admits (1 only when the guard is
    strictly positive), and each product-implication quotient ``y / x`` when
    its indicator is set and 0 otherwise.  ``target`` may be a formula, in
    which case the problem is the one for ``0 <= phi <= 1``.
    """
    clauses = target if isinstance(target, ClauseSet) else sat_query(target, ZERO)
    f: Assignment = {}
    for i, clause in enumerate(clauses):
        body = rewrite_lukasiewicz(clause.body) if rewrite else clause.body
        values: dict[str, Fraction] = {}
        for path, node in subformulas(body, str(i)):
            val = evaluate(v, node)
            values[path] = val
            if isinstance(node, Var):
                f[node.name] = val
                continue
            f[f"x_phi@{path}"] = val
            if isinstance(node, Const) or (isinstance(node, Not) and node.logic is L):
                continue
            x = values[f"{path}.0"]
            if isinstance(node, Not):
                f[f"b@{path}"] = ONE if x > 0 else ZERO
                continue
            y = values[f"{path}.1"]
            if isinstance(node, (And, Or)) and node.logic is P:
                continue
            guard = x + y - 1 if node.logic is L and not isinstance(node, Implies) else x - y
            b = ONE if guard > 0 else ZERO
            f[f"b@{path}"] = b
            if isinstance(node, Implies) and node.logic is P:
                f[f"aux@{path}"] = y / x if b else ZERO
    return f


def restrict(f: Mapping[str, Fraction], X: Iterable[str]) -> dict[str, Fraction]:
    out = {}
    for name in X:
        if name not in f:
            raise KeyError(f"variable {name!r} missing from assignment")
        out[name] = f[name]
    return out


def by_id(problem: Problem, f: Mapping[str, Fraction]) -> dict[int, Fraction]:
    names = problem.names
    return {names[k]: val for k, val in f.items() if k in names}
