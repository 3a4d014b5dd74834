"""Feasibility search for translated problems.

Depth-first search over the indicator binaries, then bisection of the
continuous variables, with forward-backward interval contraction at every
node.  Once the indicators are fixed, an exact rational linear program
decides the box when nothing nonlinear is left, and otherwise tries to empty
it through the McCormick relaxation of the remaining products.  Only
rigorous reasoning refutes a box, so an ``UNSAT`` verdict means every branch
was emptied.  Models come from rounding box points, a bounded least-squares
polish and a seeded random probe, and are only ever accepted after checking.  A ``SAT`` verdict always carries a model that was
re-checked against the clause set: exactly over the rationals, or, when the
only witnesses found are irrational, within ``epsilon``.

Indicators are kept at their least admissible value: an indicator is 1 only
where its guard is strictly positive.  Any satisfying valuation extends to
such an assignment (see ``translate.extend_valuation``), so restricting the
search this way loses no models; it removes the spurious solutions the
encodings admit at guard boundaries, e.g. a product negation of 0 with its
indicator set to 1.
"""

from __future__ import annotations

import functools
import json
import logging
import math
import time
import warnings
from collections import deque
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np
from scipy.optimize import least_squares

from . import lp
from .formula import (
    And, ClauseSet, Const, Implies, Logic, Not, Or, Valuation, Var, eval_clause, evaluate,
    format_rational, variables,
)
from .interval import (
    INF, add_down, add_up, div_down, div_up, enclose, mul, scale, sqrt_down, sqrt_up,
)
from .translate import Problem, build_problem, guard_terms

log = logging.getLogger(__name__)

SAT, UNSAT, UNKNOWN = "SAT", "UNSAT", "UNKNOWN"
EXACT, NUMERICAL = "exact", "numerical"

_EQ, _LE, _GE = 0, 1, 2
_REL = {"=": _EQ, "<=": _LE, ">=": _GE}
# denominator of the relaxation box bounds
_GRID = 2 ** 16


@dataclass
class SolverConfig:
    epsilon: float = 1e-9
    delta: float = 1e-6
    max_nodes: int = 1_000_000
    time_budget: Optional[float] = 10.0
    binary_order: str = "occurrence"
    zero_first: bool = True
    threads: int = 1
    seed: int = 0
    # nodes spent looking for an exact certificate after a numerical one
    exact_retry_nodes: int = 2000
    # random valuations tried once the search has visited probe_after nodes
    probe_after: int = 64
    probe_samples: int = 2000
    # search repeated subformulas through one shared variable
    merge_identical: bool = True

    def __post_init__(self):
        if not (self.epsilon > 0 and self.delta > 0):
            raise ValueError("epsilon and delta must be positive")
        if self.binary_order not in ("occurrence", "most-constrained"):
            raise ValueError(f"unknown binary order {self.binary_order!r}")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass(frozen=True)
class Stats:
    nodes: int = 0
    refuted: int = 0
    contractions: int = 0
    wall_ms: float = 0.0
    # the clock, not the search, ended the run
    timed_out: bool = False


@dataclass(frozen=True)
class Verdict:
    status: str
    model: Optional[dict] = None
    cert: Optional[str] = None
    reason: Optional[str] = None
    stats: Stats = field(default_factory=Stats)

    @classmethod
    def sat(cls, clauses: ClauseSet, model: Valuation, cert: str = EXACT,
            epsilon: float = 1e-9, stats: Stats = Stats()) -> "Verdict":
        """The only way to build a SAT verdict; refuses uncertified models."""
        model = {k: Fraction(model[k]) for k in sorted(model)}
        if cert == EXACT:
            ok = verify_model(clauses, model)
        else:
            ok = verify_numerical(clauses, model, epsilon)
        if not ok:
            raise ValueError(f"model does not certify ({cert})")
        return cls(SAT, model, cert, None, stats)

    @classmethod
    def unsat(cls, stats: Stats = Stats()) -> "Verdict":
        return cls(UNSAT, stats=stats)

    @classmethod
    def unknown(cls, reason: str, stats: Stats = Stats()) -> "Verdict":
        return cls(UNKNOWN, reason=reason, stats=stats)

    def with_stats(self, stats: Stats) -> "Verdict":
        return Verdict(self.status, self.model, self.cert, self.reason, stats)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "cert": self.cert,
            "reason": self.reason,
            "model": None if self.model is None else {k: format_rational(v) for k, v in self.model.items()},
            "stats": asdict(self.stats),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def verify_model(clauses: ClauseSet, v: Valuation) -> bool:
    """Exact check of every clause; the soundness anchor for SAT answers."""
    try:
        return all(eval_clause(v, c) for c in clauses)
    except KeyError:
        return False


def verify_numerical(clauses: ClauseSet, v: Valuation, epsilon: float) -> bool:
    eps = Fraction(epsilon)
    try:
        for c in clauses:
            value = evaluate(v, c.body)
            if not c.lower - eps <= value <= c.upper + eps:
                return False
    except KeyError:
        return False
    return all(0 <= x <= 1 for x in v.values())


# -- boxes and contraction --------------------------------------------------

@dataclass
class Box:
    lo: list
    hi: list
    binary: tuple
    empty: bool = False

    def width(self, i: int) -> float:
        return self.hi[i] - self.lo[i]

    def undecided(self) -> list[int]:
        return [i for i, b in enumerate(self.binary) if b and self.lo[i] != self.hi[i]]


class _Compiled:
    """Problem flattened into tuples of floats for the propagation loop."""

    def __init__(self, problem: Problem):
        self.problem = problem
        n = self.n = len(problem.vars)
        self.binary = tuple(ref.is_binary for ref in problem.vars)
        self.lb = [enclose(ref.lb)[0] for ref in problem.vars]
        self.ub = [enclose(ref.ub)[1] for ref in problem.vars]
        self.nonneg = all(x >= 0 for x in self.lb)
        self.items = []
        for con in problem.constraints:
            lin = tuple(enclose(c) + (v,) for c, v in con.linear)
            bil = tuple(enclose(c) + (v, w) for c, v, w in con.bilinear)
            klo, khi = enclose(con.constant)
            self.items.append((False, lin, bil, klo, khi, _REL[con.relation], None))
        self.n_constraints = len(self.items)
        self.guard_of = {}
        for b, con in sorted(problem.guards().items()):
            lin, k = guard_terms(con, b)
            klo, khi = enclose(k)
            self.guard_of[b] = len(self.items)
            self.items.append((True, tuple(enclose(c) + (v,) for c, v in lin), (), klo, khi, _GE, b))
        self.watch = [[] for _ in range(n)]
        for idx, item in enumerate(self.items):
            vs = {t[2] for t in item[1]} | {t[2] for t in item[2]} | {t[3] for t in item[2]}
            if item[6] is not None:
                vs.add(item[6])
            for v in sorted(vs):
                self.watch[v].append(idx)
        self.continuous = [i for i in range(n) if not self.binary[i]]
        self.binaries = [i for i in range(n) if self.binary[i]]
        self.sources = sorted(problem.sources.items())

    def root(self) -> tuple[list, list]:
        return list(self.lb), list(self.ub)

    # returns False when the box is empty
    def contract(self, lo, hi, indicators=True, queue=None, counter=None) -> bool:
        items = self.items
        n_items = len(items) if indicators else self.n_constraints
        if queue is None:
            queue = deque(range(n_items))
        queued = [False] * len(items)
        for q in queue:
            queued[q] = True
        budget = 40 * len(items) + 100
        steps = 0
        while queue:
            idx = queue.popleft()
            queued[idx] = False
            steps += 1
            changed = self._revise(items[idx], lo, hi)
            if changed is None:
                if counter is not None:
                    counter[0] += steps
                return False
            for v in changed:
                for dep in self.watch[v]:
                    if dep < n_items and not queued[dep] and dep != idx:
                        queued[dep] = True
                        queue.append(dep)
            if steps > budget:
                break
        if counter is not None:
            counter[0] += steps
        return True

    def _set(self, v, nlo, nhi, lo, hi, changed) -> bool:
        olo, ohi = lo[v], hi[v]
        if nlo <= olo and nhi >= ohi:
            return True
        newlo = nlo if nlo > olo else olo
        newhi = nhi if nhi < ohi else ohi
        if self.binary[v]:
            newlo = 1.0 if newlo > 0.0 else 0.0
            newhi = 0.0 if newhi < 1.0 else 1.0
        if newlo > newhi:
            return False
        if newlo == olo and newhi == ohi:
            return True
        lo[v], hi[v] = newlo, newhi
        width = ohi - olo
        if newhi - newlo < 0.99 * width or newhi == newlo:
            changed.append(v)
        return True

    def _revise(self, item, lo, hi):
        is_guard, lin, bil, klo, khi, rel, b = item
        changed: list[int] = []
        if is_guard and lo[b] != 1.0:
            if hi[b] == 0.0:
                return changed
        terms = []
        slo, shi = klo, khi
        for clo, chi, v in lin:
            if clo == chi:
                tlo, thi = scale(clo, lo[v], hi[v])
            else:
                tlo, thi = mul(clo, chi, lo[v], hi[v])
            terms.append((tlo, thi))
            slo, shi = add_down(slo, tlo), add_up(shi, thi)
        for clo, chi, v, w in bil:
            if v == w and lo[v] >= 0.0:
                plo, phi_ = mul(lo[v], hi[v], lo[v], hi[v])
            else:
                plo, phi_ = mul(lo[v], hi[v], lo[w], hi[w])
            tlo, thi = mul(clo, chi, plo, phi_)
            terms.append((tlo, thi))
            slo, shi = add_down(slo, tlo), add_up(shi, thi)

        if is_guard:
            # b is 0 unless the guard can be strictly positive
            if shi <= 0.0:
                if lo[b] == 1.0:
                    return None
                if hi[b] != 0.0:
                    hi[b] = 0.0
                    changed.append(b)
                return changed
            if lo[b] != 1.0:
                return changed

        if rel == _EQ:
            if slo > 0.0 or shi < 0.0:
                return None
        elif rel == _LE:
            if slo > 0.0:
                return None
            if shi <= 0.0:
                return changed
        else:
            if shi < 0.0:
                return None
            if slo >= 0.0:
                return changed

        k = 0
        for clo, chi, v in lin:
            tlo, thi = terms[k]
            k += 1
            nlo, nhi = self._term_range(slo, shi, tlo, thi, rel)
            if nlo <= tlo and nhi >= thi:
                continue
            xlo, xhi = _divide_by_coef(nlo, nhi, clo, chi)
            if not self._set(v, xlo, xhi, lo, hi, changed):
                return None
        for clo, chi, v, w in bil:
            tlo, thi = terms[k]
            k += 1
            nlo, nhi = self._term_range(slo, shi, tlo, thi, rel)
            if nlo <= tlo and nhi >= thi:
                continue
            if not (lo[v] >= 0.0 and lo[w] >= 0.0):
                continue
            ulo, uhi = _divide_by_coef(nlo, nhi, clo, chi)
            if uhi < 0.0:
                return None
            if v == w:
                xlo = sqrt_down(ulo) if ulo > 0.0 else -INF
                xhi = sqrt_up(uhi) if uhi < INF else INF
                if not self._set(v, xlo, xhi, lo, hi, changed):
                    return None
                continue
            for x, y in ((v, w), (w, v)):
                xlo, xhi = -INF, INF
                if ulo > 0.0:
                    if hi[y] == 0.0:
                        return None
                    xlo = div_down(ulo, hi[y])
                if lo[y] > 0.0 and uhi < INF:
                    xhi = div_up(uhi, lo[y])
                if not self._set(x, xlo, xhi, lo, hi, changed):
                    return None
        return changed

    @staticmethod
    def _term_range(slo, shi, tlo, thi, rel):
        # term = -(rest) + target, with rest = sum - term
        nlo, nhi = -INF, INF
        if rel != _LE:
            nlo = -add_up(shi, -thi)
        if rel != _GE:
            nhi = -add_down(slo, -tlo)
        return nlo, nhi


def _divide_by_coef(nlo, nhi, clo, chi):
    """Enclosure of ``{x : c * x in [nlo, nhi]}`` for ``c`` in ``[clo, chi]`` (no sign change)."""
    if clo < 0.0:
        nlo, nhi, clo, chi = -nhi, -nlo, -chi, -clo
    xlo = div_down(nlo, chi if nlo >= 0.0 else clo) if nlo > -INF else -INF
    xhi = div_up(nhi, clo if nhi >= 0.0 else chi) if nhi < INF else INF
    return xlo, xhi


@functools.lru_cache(maxsize=16)
def _compile(problem: Problem) -> _Compiled:
    return _Compiled(problem)


def make_box(problem: Problem) -> Box:
    comp = _compile(problem)
    lo, hi = comp.root()
    return Box(lo, hi, comp.binary)


def contract(problem: Problem, box: Box, indicators: bool = False) -> Box:
    """Shrink ``box`` without discarding any point that satisfies the constraints.

    With ``indicators`` set, points where an indicator exceeds the least value
    its guard admits are discarded as well.
    """
    if box.empty:
        return box
    comp = _compile(problem)
    lo, hi = list(box.lo), list(box.hi)
    if not comp.contract(lo, hi, indicators=indicators):
        return Box(lo, hi, box.binary, empty=True)
    return Box(lo, hi, box.binary)


def branch(box: Box, cfg: SolverConfig = SolverConfig()) -> tuple[Box, Box]:
    """Split on the first undecided binary, else bisect the widest interval.

    The first child is the one explored first (the zero branch under
    ``zero_first``).
    """
    if box.empty:
        raise ValueError("cannot branch on an empty box")
    for i in box.undecided():
        zero = Box(list(box.lo), list(box.hi), box.binary)
        one = Box(list(box.lo), list(box.hi), box.binary)
        zero.hi[i] = 0.0
        one.lo[i] = 1.0
        return (zero, one) if cfg.zero_first else (one, zero)
    v = _widest(box.lo, box.hi, [i for i, b in enumerate(box.binary) if not b], cfg.delta)
    if v is None:
        raise ValueError("box is atomic")
    return _bisect(box, v)


def _widest(lo, hi, candidates, delta):
    best, best_w = None, delta
    for i in candidates:
        w = hi[i] - lo[i]
        if w > best_w:
            best, best_w = i, w
    return best


def _bisect(box: Box, v: int) -> tuple[Box, Box]:
    mid = 0.5 * (box.lo[v] + box.hi[v])
    left = Box(list(box.lo), list(box.hi), box.binary)
    right = Box(list(box.lo), list(box.hi), box.binary)
    left.hi[v] = mid
    right.lo[v] = mid
    return left, right


# -- search -----------------------------------------------------------------

class _Search:
    def __init__(self, problem: Problem, clauses: ClauseSet, cfg: SolverConfig):
        self.problem = problem
        self.clauses = clauses
        self.cfg = cfg
        self.comp = _compile(problem)
        self.tried: set = set()
        self.nodes = 0
        self.refuted = 0
        self.steps = [0]
        self.rng = np.random.default_rng(cfg.seed)
        binary = self.comp.binary
        self.linear = all(binary[v] or binary[w]
                          for con in problem.constraints for _, v, w in con.bilinear)

    def stats(self, start, timed_out=False) -> Stats:
        return Stats(self.nodes, self.refuted, self.steps[0], round((time.perf_counter() - start) * 1000, 3),
                     timed_out)

    def run(self) -> Verdict:
        cfg = self.cfg
        start = time.perf_counter()
        deadline = None if cfg.time_budget is None else start + cfg.time_budget
        lo0, hi0 = self.comp.root()
        # entries: (lo, hi, reached by bisection)
        stack = [(lo0, hi0, False)]
        undecided = 0
        numerical = None
        retry_left = None
        exhausted = None
        while stack:
            if self.nodes >= cfg.max_nodes:
                exhausted = "node budget exhausted"
                break
            if deadline is not None and time.perf_counter() > deadline:
                exhausted = "time budget exhausted"
                break
            if retry_left is not None:
                retry_left -= 1
                if retry_left < 0:
                    break
            lo, hi, bisected = stack.pop()
            self.nodes += 1
            if self.nodes == cfg.probe_after and numerical is None:
                model = self.probe()
                if model is not None:
                    return Verdict.sat(self.clauses, model, EXACT, cfg.epsilon, self.stats(start))
            if not self.comp.contract(lo, hi, counter=self.steps):
                self.refuted += 1
                continue
            model = self.candidates(lo, hi)
            if model is not None:
                return Verdict.sat(self.clauses, model, EXACT, cfg.epsilon, self.stats(start))
            b = self.pick_binary(lo, hi)
            if b is not None:
                zero = (lo, hi[:b] + [0.0] + hi[b + 1:], False)
                one = (lo[:b] + [1.0] + lo[b + 1:], hi, False)
                stack += [one, zero] if cfg.zero_first else [zero, one]
                continue
            if self.linear:
                model = self.exact_leaf(lo)
                if model is None:
                    self.refuted += 1
                    continue
                return Verdict.sat(self.clauses, model, EXACT, cfg.epsilon, self.stats(start))
            if self.relaxed_empty(lo, hi):
                self.refuted += 1
                continue
            v = _widest(lo, hi, self.comp.continuous, cfg.delta)
            if not bisected and numerical is None:
                # indicators just became fixed: try a local solve of the rest
                found = self.polish(lo, hi)
                if found is not None:
                    model, cert = found
                    if cert == EXACT:
                        return Verdict.sat(self.clauses, model, EXACT, cfg.epsilon, self.stats(start))
                    numerical = model
                    retry_left = cfg.exact_retry_nodes
            if v is not None:
                mid = 0.5 * (lo[v] + hi[v])
                left = (lo, hi[:v] + [mid] + hi[v + 1:], True)
                right = (lo[:v] + [mid] + lo[v + 1:], hi, True)
                stack += [right, left]
                continue
            if numerical is None:
                found = self.polish(lo, hi, starts=1)
                if found is not None:
                    model, cert = found
                    if cert == EXACT:
                        return Verdict.sat(self.clauses, model, EXACT, cfg.epsilon, self.stats(start))
                    numerical = model
                    retry_left = cfg.exact_retry_nodes
                    continue
            undecided += 1
        stats = self.stats(start, exhausted == "time budget exhausted")
        if numerical is not None:
            return Verdict.sat(self.clauses, numerical, NUMERICAL, cfg.epsilon, stats)
        if exhausted:
            return Verdict.unknown(exhausted, stats)
        if undecided:
            return Verdict.unknown(f"{undecided} boxes neither refuted nor certified", stats)
        return Verdict.unsat(stats)

    def pick_binary(self, lo, hi):
        free = [b for b in self.comp.binaries if lo[b] != hi[b]]
        if not free:
            return None
        if self.cfg.binary_order == "occurrence":
            return free[0]
        # narrowest guard first: its sign is closest to being settled
        best, best_w = free[0], INF
        for b in free:
            lin = self.comp.items[self.comp.guard_of[b]][1] if b in self.comp.guard_of else ()
            w = sum(hi[v] - lo[v] for _, _, v in lin)
            if w < best_w:
                best, best_w = b, w
        return best

    def probe(self):
        """Score seeded random valuations in floats and check the best exactly."""
        names = [name for name, _ in self.comp.sources]
        if not names or self.cfg.probe_samples <= 0:
            return None
        pts = self.rng.random((self.cfg.probe_samples, len(names)))
        scored = []
        for k, row in enumerate(pts):
            v = dict(zip(names, row))
            viol = 0.0
            for c in self.clauses:
                y = _evaluate_float(v, c.body)
                viol += max(float(c.lower) - y, 0.0) + max(y - float(c.upper), 0.0)
            scored.append((viol, k))
        scored.sort()
        for viol, k in scored[:8]:
            for limit in (100, 10 ** 6):
                model = {n: Fraction(float(x)).limit_denominator(limit) for n, x in zip(names, pts[k])}
                if verify_model(self.clauses, model):
                    return model
        return None

    def exact_leaf(self, lo):
        """Decide a box whose indicators are all fixed and whose rest is linear.

        Solves, over the rationals, the linear program that maximises the
        least slack ``t`` of the guards of the indicators set to 1, within
        the variable bounds.  The leaf holds a model iff the program is
        feasible with ``t > 0`` (or feasible at all when no indicator is
        set).  Returns the model, or ``None`` when the leaf is empty.
        """
        found = self._leaf_lp(lo)
        if found is None:
            return None
        model = {name: found[i] for name, i in self.comp.sources}
        if not verify_model(self.clauses, model):
            raise AssertionError("linear leaf produced a model that does not verify")
        return model

    def relaxed_empty(self, lo, hi) -> bool:
        """True when the McCormick relaxation of a fixed-indicator box is empty."""
        return self._leaf_lp(lo, hi) is None

    def _leaf_lp(self, lo, hi=None):
        # with hi given, products of two continuous variables are replaced by
        # a fresh column enclosed by its McCormick envelope over the box
        problem = self.problem
        fixed = {b: Fraction(int(lo[b])) for b in self.comp.binaries}
        cont = self.comp.continuous
        col = {v: k for k, v in enumerate(cont)}
        prod: dict = {}
        if hi is not None:
            for con in problem.constraints:
                for _, v, w in con.bilinear:
                    if v not in fixed and w not in fixed:
                        prod.setdefault((v, w), len(cont) + len(prod))
        width = len(cont) + len(prod) + 1  # last column is t

        def row(linear, bilinear, constant):
            r = [Fraction(0)] * width
            for c, v in linear:
                if v in fixed:
                    constant += c * fixed[v]
                else:
                    r[col[v]] += c
            for c, v, w in bilinear:
                if v in fixed and w in fixed:
                    constant += c * fixed[v] * fixed[w]
                elif v in fixed:
                    r[col[w]] += c * fixed[v]
                elif w in fixed:
                    r[col[v]] += c * fixed[w]
                else:
                    r[prod[v, w]] += c
            return r, constant

        A, b, A_eq, b_eq = [], [], [], []
        for con in problem.constraints:
            r, k = row(con.linear, con.bilinear, con.constant)
            if con.relation == "=":
                A_eq.append(r)
                b_eq.append(-k)
            elif con.relation == "<=":
                A.append(r)
                b.append(-k)
            else:
                A.append([-c for c in r])
                b.append(k)
        if hi is None:
            bounds = [(problem.vars[v].lb, problem.vars[v].ub) for v in cont]
        else:
            # outward to a coarse dyadic grid: still a relaxation, and pivots stay cheap
            bounds = [(max(problem.vars[v].lb, Fraction(math.floor(lo[v] * _GRID), _GRID)),
                       min(problem.vars[v].ub, Fraction(math.ceil(hi[v] * _GRID), _GRID))) for v in cont]
        for (v, w), k in prod.items():
            vl, vh, wl, wh = bounds[col[v]] + bounds[col[w]]
            # p >= vl*w + wl*v - vl*wl, p >= vh*w + wh*v - vh*wh,
            # p <= vh*w + wl*v - vh*wl, p <= vl*w + wh*v - vl*wh
            for sign, a, c in ((-1, vl, wl), (-1, vh, wh), (1, vh, wl), (1, vl, wh)):
                r = [Fraction(0)] * width
                r[k] = Fraction(sign)
                r[col[w]] -= sign * a
                r[col[v]] -= sign * c
                A.append(r)
                b.append(-sign * a * c)
            bounds.append((min(vl * wl, vl * wh, vh * wl, vh * wh), max(vl * wl, vl * wh, vh * wl, vh * wh)))
        strict = False
        for g, con in problem.guards().items():
            if fixed[g] == 1:
                lin, k = guard_terms(con, g)
                r, k = row(lin, (), k)
                # t - g <= 0
                r = [-c for c in r]
                r[-1] = Fraction(1)
                A.append(r)
                b.append(k)
                strict = True
        bounds.append((None, 1) if strict else (0, 0))
        cost = [0] * (width - 1) + [1]
        try:
            value, x = lp.maximize(cost, A, b, A_eq, b_eq, bounds)
        except lp.Infeasible:
            return None
        if strict and value <= 0:
            return None
        f = {v: x[col[v]] for v in cont}
        f.update(fixed)
        return f

    def candidates(self, lo, hi):
        """Round a few points of the box to rationals and check them exactly."""
        sources = self.comp.sources
        for point in (lo, [0.5 * (a + b) for a, b in zip(lo, hi)]):
            for limit in (100, 10 ** 6):
                model = {}
                for name, i in sources:
                    q = Fraction(point[i]).limit_denominator(limit)
                    model[name] = min(max(q, Fraction(0)), Fraction(1))
                key = tuple(model.values())
                if key in self.tried:
                    continue
                if len(self.tried) < 100_000:
                    self.tried.add(key)
                if verify_model(self.clauses, model):
                    return model
        return None

    def polish(self, lo, hi, starts=3):
        """Local solves from the box midpoint and seeded random points.

        Returns ``(model, cert)`` for the first start whose rounded or raw
        result certifies, else ``None``.
        """
        points = [[0.5 * (a + b) for a, b in zip(lo, hi)]]
        for _ in range(starts - 1):
            u = self.rng.random(len(lo))
            points.append([a + t * (b - a) for a, b, t in zip(lo, hi, u)])
        for x0 in points:
            found = self.numeric(lo, hi, x0)
            if found is not None:
                return found
        return None

    def numeric(self, lo, hi, start):
        """Bounded least squares on the constraints with the indicators held fixed."""
        comp, cfg = self.comp, self.cfg
        fixed = {b: lo[b] for b in comp.binaries}
        free = [v for v in comp.continuous if hi[v] > lo[v]]
        pinned = {v: lo[v] for v in comp.continuous if hi[v] <= lo[v]}
        index = {v: k for k, v in enumerate(free)}
        known = {**fixed, **pinned}
        cons = comp.items[:comp.n_constraints]

        def value(v, x):
            return x[index[v]] if v in index else known[v]

        def residuals(x):
            out = np.zeros(len(cons))
            for k, (_, lin, bil, klo, khi, rel, _) in enumerate(cons):
                r = 0.5 * (klo + khi)
                for clo, _, v in lin:
                    r += clo * value(v, x)
                for clo, _, v, w in bil:
                    r += clo * value(v, x) * value(w, x)
                if rel == _LE:
                    r = max(r, 0.0)
                elif rel == _GE:
                    r = min(r, 0.0)
                out[k] = r
            return out

        def jacobian(x):
            J = np.zeros((len(cons), len(free)))
            r = residuals(x)
            for k, (_, lin, bil, _, _, rel, _) in enumerate(cons):
                if rel != _EQ and r[k] == 0.0:
                    continue
                for clo, _, v in lin:
                    if v in index:
                        J[k, index[v]] += clo
                for clo, _, v, w in bil:
                    if v in index:
                        J[k, index[v]] += clo * value(w, x)
                    if w in index:
                        J[k, index[w]] += clo * value(v, x)
            return J

        if free:
            x0 = np.array([min(max(start[v], lo[v] + 1e-9 * (hi[v] - lo[v])), hi[v] - 1e-9 * (hi[v] - lo[v]))
                           for v in free])
            with warnings.catch_warnings(), np.errstate(all="ignore"):
                warnings.simplefilter("ignore")
                sol = least_squares(residuals, x0, jac=jacobian,
                                    bounds=([lo[v] for v in free], [hi[v] for v in free]),
                                    method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
            x = sol.x
        else:
            x = np.zeros(0)
        f = {v: Fraction(float(value(v, x))) for v in comp.continuous}
        f.update({b: Fraction(val) for b, val in fixed.items()})
        model = {name: f[i] for name, i in comp.sources}
        for limit in (100, 10 ** 6):
            exact = {k: min(max(q.limit_denominator(limit), Fraction(0)), Fraction(1)) for k, q in model.items()}
            if verify_model(self.clauses, exact):
                return exact, EXACT
        if verify_model(self.clauses, model):
            return model, EXACT
        eps = Fraction(cfg.epsilon)
        if any(con.residual(f) > eps for con in self.problem.constraints):
            return None
        if verify_numerical(self.clauses, model, cfg.epsilon):
            return model, NUMERICAL
        return None


def _evaluate_float(v, phi) -> float:
    if isinstance(phi, Var):
        return v[phi.name]
    if isinstance(phi, Const):
        return float(phi.value)
    if isinstance(phi, Not):
        x = _evaluate_float(v, phi.sub)
        if phi.logic is Logic.LUKASIEWICZ:
            return 1.0 - x
        return 1.0 if x == 0.0 else 0.0
    x, y = _evaluate_float(v, phi.lhs), _evaluate_float(v, phi.rhs)
    return float(_FLOAT_OPS[type(phi), phi.logic](x, y))


def _implies_float(logic):
    def f(x, y):
        if x <= y:
            return 1.0
        if logic is Logic.LUKASIEWICZ:
            return 1.0 - x + y
        return y / x if logic is Logic.PRODUCT else y
    return f


_FLOAT_OPS = {}
for _lg in Logic:
    _FLOAT_OPS[And, _lg] = {Logic.LUKASIEWICZ: lambda x, y: max(0.0, x + y - 1.0),
                            Logic.PRODUCT: lambda x, y: x * y, Logic.GOEDEL: min}[_lg]
    _FLOAT_OPS[Or, _lg] = {Logic.LUKASIEWICZ: lambda x, y: min(1.0, x + y),
                           Logic.PRODUCT: lambda x, y: x + y - x * y, Logic.GOEDEL: max}[_lg]
    _FLOAT_OPS[Implies, _lg] = _implies_float(_lg)


def _check_pairing(problem: Problem, clauses: ClauseSet):
    used = set().union(*(variables(c.body) for c in clauses))
    if set(problem.sources) != used:
        raise ValueError("problem and clause set disagree on the fuzzy variables")
    if problem.roots and len(problem.roots) != len(clauses):
        raise ValueError("problem and clause set disagree on the number of clauses")


def solve(problem: Problem, clauses: ClauseSet, cfg: SolverConfig = SolverConfig()) -> Verdict:
    """Decide the clause set through its translated problem.

    With ``cfg.merge_identical``, a problem that is the plain translation of
    ``clauses`` is searched in its shared form, where repeated subformulas
    have one variable.  Every indicator-minimal assignment gives each
    subformula its true value, so the two have the same models.
    """
    _check_pairing(problem, clauses)
    if cfg.merge_identical:
        for rewrite in (False, True):
            if problem == build_problem(clauses, rewrite=rewrite):
                problem = build_problem(clauses, rewrite=rewrite, share=True)
                break
    verdict = _Search(problem, clauses, cfg).run()
    log.debug("solve: %s after %d nodes", verdict.status, verdict.stats.nodes)
    return verdict


def run_backend(problem: Problem, clauses: ClauseSet, cfg: SolverConfig = SolverConfig(),
                backend: str = "native", dest=None, timeout: float | None = None,
                trust_external_unsat: bool = False) -> Verdict:
    """Dispatch to the native search, a model export, or an external adapter.

    ``backend`` is ``"native"``, ``"export"`` or ``"external:<command>"``.
    External models are re-verified here before they become SAT answers.
    """
    from . import interop

    if backend == "native":
        return solve(problem, clauses, cfg)
    if backend in ("export", "export-only"):
        if dest is None:
            raise ValueError("export backend needs a destination")
        interop.write_model(problem, dest)
        return Verdict.unknown("exported")
    if not backend.startswith("external:"):
        raise ValueError(f"unknown backend {backend!r}")

    _check_pairing(problem, clauses)
    result = interop.call_external(backend[len("external:"):], problem, timeout=timeout or cfg.time_budget)
    if result.status == "FEASIBLE":
        sources = problem.sources
        model = {name: result.assignments[name] for name in sources if name in result.assignments}
        if len(model) != len(sources):
            return Verdict.unknown("uncertified external model")
        if verify_model(clauses, model):
            return Verdict.sat(clauses, model, EXACT, cfg.epsilon)
        if verify_numerical(clauses, model, cfg.epsilon):
            return Verdict.sat(clauses, model, NUMERICAL, cfg.epsilon)
        return Verdict.unknown("uncertified external model")
    if result.status == "INFEASIBLE":
        if trust_external_unsat:
            return Verdict.unsat()
        return Verdict.unknown("external solver reported infeasible (not certified)")
    return Verdict.unknown(result.diagnostic or "external solver returned unknown")
