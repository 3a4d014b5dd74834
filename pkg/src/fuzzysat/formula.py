"""Fuzzy formulas over the Lukasiewicz, Product and Goedel logics.

Formulas are immutable trees.  Truth values are exact ``Fraction`` objects in
[0, 1]; the evaluator here is the one every SAT certificate is checked with,
so nothing in this module touches floating point.

Concrete syntax (one clause per line or ``;``-separated, ``#`` comments)::

    0.75 <= !p (x1 ->p x2) ->p x3 <= 0.75
    1/3 <= (a &l b) |g c <= 2/3

Connectives carry a logic suffix: ``l`` (Lukasiewicz), ``p`` (Product),
``g`` (Goedel).  Precedence from loosest to tightest is ``->`` (right
associative), ``|``, ``&`` (both left associative), then the prefix ``!``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Union

ZERO = Fraction(0)
ONE = Fraction(1)


class Logic(enum.Enum):
    LUKASIEWICZ = "l"
    PRODUCT = "p"
    GOEDEL = "g"

    @property
    def suffix(self) -> str:
        return self.value


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: Fraction

    def __post_init__(self):
        value = Fraction(self.value)
        if not ZERO <= value <= ONE:
            raise ValueError(f"constant {value} outside [0, 1]")
        object.__setattr__(self, "value", value)


@dataclass(frozen=True)
class Not:
    logic: Logic
    sub: "Formula"


@dataclass(frozen=True)
class And:
    logic: Logic
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Or:
    logic: Logic
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Implies:
    logic: Logic
    lhs: "Formula"
    rhs: "Formula"


Formula = Union[Var, Const, Not, And, Or, Implies]
Binary = (And, Or, Implies)
Valuation = Mapping[str, Fraction]


@dataclass(frozen=True)
class Clause:
    """The bounded formula ``lower <= body <= upper``."""

    lower: Fraction
    body: Formula
    upper: Fraction

    def __post_init__(self):
        lower, upper = Fraction(self.lower), Fraction(self.upper)
        for bound in (lower, upper):
            if not ZERO <= bound <= ONE:
                raise ValueError(f"clause bound {bound} outside [0, 1]")
        if lower > upper:
            raise ValueError(f"clause lower bound {lower} exceeds upper bound {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)


@dataclass(frozen=True)
class ClauseSet:
    clauses: tuple[Clause, ...]
    vocabulary: frozenset[str] = field(default=frozenset())

    def __post_init__(self):
        clauses = tuple(self.clauses)
        used = frozenset().union(*(variables(c.body) for c in clauses))
        object.__setattr__(self, "clauses", clauses)
        object.__setattr__(self, "vocabulary", frozenset(self.vocabulary) | used)

    def __iter__(self) -> Iterator[Clause]:
        return iter(self.clauses)

    def __len__(self) -> int:
        return len(self.clauses)


class EvaluationError(KeyError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


# -- semantics --------------------------------------------------------------

def t_and(logic: Logic, x: Fraction, y: Fraction) -> Fraction:
    if logic is Logic.LUKASIEWICZ:
        return max(ZERO, x + y - 1)
    if logic is Logic.PRODUCT:
        return x * y
    return min(x, y)


def t_or(logic: Logic, x: Fraction, y: Fraction) -> Fraction:
    if logic is Logic.LUKASIEWICZ:
        return min(ONE, x + y)
    if logic is Logic.PRODUCT:
        return x + y - x * y
    return max(x, y)


def t_implies(logic: Logic, x: Fraction, y: Fraction) -> Fraction:
    if x <= y:
        return ONE
    if logic is Logic.LUKASIEWICZ:
        return 1 - x + y
    if logic is Logic.PRODUCT:
        return y / x
    return y


def t_not(logic: Logic, x: Fraction) -> Fraction:
    if logic is Logic.LUKASIEWICZ:
        return 1 - x
    return ONE if x == 0 else ZERO


def evaluate(v: Valuation, phi: Formula) -> Fraction:
    """Truth value of ``phi`` under ``v``, computed exactly."""
    if isinstance(phi, Var):
        try:
            return Fraction(v[phi.name])
        except KeyError:
            raise EvaluationError(f"variable {phi.name!r} is not bound by the valuation") from None
    if isinstance(phi, Const):
        return phi.value
    if isinstance(phi, Not):
        return t_not(phi.logic, evaluate(v, phi.sub))
    x, y = evaluate(v, phi.lhs), evaluate(v, phi.rhs)
    if isinstance(phi, And):
        return t_and(phi.logic, x, y)
    if isinstance(phi, Or):
        return t_or(phi.logic, x, y)
    return t_implies(phi.logic, x, y)


def eval_clause(v: Valuation, c: Clause) -> bool:
    return c.lower <= evaluate(v, c.body) <= c.upper


def sat_query(phi: Formula, k=ONE) -> ClauseSet:
    """The clause set ``{k <= phi <= 1}``: phi is k-SAT iff it is satisfiable."""
    return ClauseSet((Clause(Fraction(k), phi, ONE),))


def variables(phi: Formula) -> frozenset[str]:
    if isinstance(phi, Var):
        return frozenset((phi.name,))
    if isinstance(phi, Const):
        return frozenset()
    if isinstance(phi, Not):
        return variables(phi.sub)
    return variables(phi.lhs) | variables(phi.rhs)


def children(phi: Formula) -> tuple:
    if isinstance(phi, Not):
        return (phi.sub,)
    if isinstance(phi, Binary):
        return (phi.lhs, phi.rhs)
    return ()


def subformulas(phi: Formula, path: str = "0") -> Iterator[tuple[str, Formula]]:
    """Yield ``(path, node)`` for every node, children before parents.

    Paths are dotted child indices below the root path, so two occurrences of
    the same syntactic subformula get distinct paths.
    """
    for i, child in enumerate(children(phi)):
        yield from subformulas(child, f"{path}.{i}")
    yield path, phi


def size(phi: Formula) -> int:
    """Number of connectives."""
    return sum(1 for _, node in subformulas(phi) if not isinstance(node, (Var, Const)))


def depth(phi: Formula) -> int:
    kids = children(phi)
    return 1 + max(map(depth, kids)) if kids else 0


def logics(phi: Formula) -> frozenset[Logic]:
    return frozenset(node.logic for _, node in subformulas(phi) if hasattr(node, "logic"))


# -- concrete syntax --------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<semi>;)
  | (?P<le><=)
  | (?P<impl>->[lpg])
  | (?P<or>\|[lpg])
  | (?P<and>&[lpg])
  | (?P<neg>![lpg])
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<rational>\d+\s*/\s*\d+|\d+(?:\.\d*)?|\.\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)

_BINARY = {"impl": Implies, "or": Or, "and": And}


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, m.group(), line, pos - line_start + 1))
        if kind == "newline":
            line, line_start = line + 1, m.end()
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


def parse_rational(text: str) -> Fraction:
    text = "".join(text.split())
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise ValueError("zero denominator")
        return Fraction(int(num), int(den))
    return Fraction(text)


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.column)

    def take(self, kind: str) -> _Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            self.fail(f"expected {kind}, found {found!r}")
        self.pos += 1
        return self.tokens[self.pos - 1]

    def clause_set(self) -> ClauseSet:
        clauses = []
        while self.tok.kind != "eof":
            if self.tok.kind in ("newline", "semi"):
                self.pos += 1
                continue
            clauses.append(self.clause())
            if self.tok.kind not in ("newline", "semi", "eof"):
                self.fail(f"unexpected {self.tok.text!r} after clause")
        return ClauseSet(tuple(clauses))

    def clause(self) -> Clause:
        start = self.tok
        lower = self.rational()
        self.take("le")
        body = self.formula()
        self.take("le")
        upper = self.rational()
        if lower > upper:
            self.fail(f"lower bound {lower} exceeds upper bound {upper}", start)
        return Clause(lower, body, upper)

    def rational(self) -> Fraction:
        tok = self.take("rational")
        try:
            value = parse_rational(tok.text)
        except (ValueError, ZeroDivisionError) as exc:
            self.fail(f"bad rational {tok.text!r}: {exc}", tok)
        if not ZERO <= value <= ONE:
            self.fail(f"rational {tok.text} outside [0, 1]", tok)
        return value

    def formula(self) -> Formula:
        lhs = self.binary("or")
        if self.tok.kind == "impl":
            logic = Logic(self.take("impl").text[-1])
            return Implies(logic, lhs, self.formula())
        return lhs

    def binary(self, kind: str) -> Formula:
        sub = (lambda: self.binary("and")) if kind == "or" else self.unary
        lhs = sub()
        while self.tok.kind == kind:
            logic = Logic(self.take(kind).text[-1])
            lhs = _BINARY[kind](logic, lhs, sub())
        return lhs

    def unary(self) -> Formula:
        if self.tok.kind == "neg":
            logic = Logic(self.take("neg").text[-1])
            return Not(logic, self.unary())
        if self.tok.kind == "ident":
            return Var(self.take("ident").text)
        if self.tok.kind == "rational":
            return Const(self.rational())
        if self.tok.kind == "lparen":
            self.take("lparen")
            inner = self.formula()
            self.take("rparen")
            return inner
        self.fail(f"expected a formula, found {self.tok.text or 'end of input'!r}")


def parse(text: str) -> ClauseSet:
    return _Parser(text).clause_set()


def parse_formula(text: str) -> Formula:
    p = _Parser(text)
    phi = p.formula()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.tok.text!r}")
    return phi


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


_SYMBOL = {And: "&", Or: "|", Implies: "->"}


def render(phi: Formula) -> str:
    """Canonical text: every compound operand is parenthesised."""
    def operand(sub):
        text = render(sub)
        return f"({text})" if isinstance(sub, Binary) else text

    if isinstance(phi, Var):
        return phi.name
    if isinstance(phi, Const):
        return format_rational(phi.value)
    if isinstance(phi, Not):
        return f"!{phi.logic.suffix} {operand(phi.sub)}"
    return f"{operand(phi.lhs)} {_SYMBOL[type(phi)]}{phi.logic.suffix} {operand(phi.rhs)}"


def render_clause(c: Clause) -> str:
    return f"{format_rational(c.lower)} <= {render(c.body)} <= {format_rational(c.upper)}"


def render_clauses(clauses: ClauseSet) -> str:
    return "".join(render_clause(c) + "\n" for c in clauses)
