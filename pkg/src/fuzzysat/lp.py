"""Exact rational linear programming for small dense problems.

Equalities are eliminated by substitution first, bounded variables are
shifted to be non-negative, and what is left goes through a two-phase
tableau simplex with Bland's rule, so the arithmetic never rounds and the
method terminates.  The problems met here have a handful of free columns
after elimination, which keeps the dense tableau cheap.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from gmpy2 import mpq

_ZERO = mpq(0)


class Infeasible(Exception):
    pass


class Unbounded(Exception):
    pass


def _q(x) -> mpq:
    return x if isinstance(x, type(_ZERO)) else mpq(x)


def _frac(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def maximize(c: Sequence, A: Sequence[Sequence], b: Sequence,
             A_eq: Sequence[Sequence] = (), b_eq: Sequence = (),
             bounds: Optional[Sequence[tuple]] = None) -> tuple[Fraction, list[Fraction]]:
    """Maximise ``c.x`` subject to ``A x <= b``, ``A_eq x = b_eq`` and bounds.

    ``bounds`` holds ``(lo, hi)`` per variable with ``None`` for no bound;
    the default is ``x >= 0``.  Raises :class:`Infeasible` or
    :class:`Unbounded`; otherwise returns the optimum and an optimal point.
    """
    n = len(c)
    bounds = list(bounds) if bounds is not None else [(0, None)] * n
    # a row is (coefficients over the n original variables, constant); value = coef.x + constant
    ineq = [([_q(v) for v in row], -_q(r)) for row, r in zip(A, b)]  # coef.x - b <= 0
    eqs = [([_q(v) for v in row], -_q(r)) for row, r in zip(A_eq, b_eq)]
    obj = ([_q(v) for v in c], _ZERO)
    lo = [None if l is None else _q(l) for l, _ in bounds]
    hi = [None if h is None else _q(h) for _, h in bounds]
    for j in range(n):
        if lo[j] is not None and hi[j] is not None and lo[j] > hi[j]:
            raise Infeasible

    # eliminate equalities: x_j = -(rest + constant) / a_j
    subst: list[tuple[int, list, mpq]] = []
    for k in range(len(eqs)):
        coef, const = eqs[k]
        j = next((j for j in range(n) if coef[j] != 0), None)
        if j is None:
            if const != 0:
                raise Infeasible
            continue
        a = coef[j]
        expr = [-v / a for v in coef]
        expr[j] = _ZERO
        econst = -const / a

        def apply(row):
            rc, rk = row
            f = rc[j]
            if f == 0:
                return row
            nc = [u + f * e for u, e in zip(rc, expr)]
            nc[j] = _ZERO
            return nc, rk + f * econst

        eqs = eqs[:k + 1] + [apply(r) for r in eqs[k + 1:]]
        ineq = [apply(r) for r in ineq]
        obj = apply(obj)
        subst = [(i, *apply((e, k0))) for i, e, k0 in subst]
        subst.append((j, expr, econst))
        # the bounds of x_j now constrain the expression
        if hi[j] is not None:
            ineq.append((expr, econst - hi[j]))
        if lo[j] is not None:
            ineq.append(([-v for v in expr], lo[j] - econst))
        lo[j] = hi[j] = None
    eliminated = {j for j, _, _ in subst}

    # remaining columns: x_j = shift + sign * y (y >= 0), free ones split in two
    cols: list[tuple[int, int]] = []  # (original variable, sign)
    shift = [_ZERO] * n
    for j in range(n):
        if j in eliminated:
            continue
        if lo[j] is not None:
            shift[j] = lo[j]
            cols.append((j, 1))
            if hi[j] is not None:
                row = [_ZERO] * n
                row[j] = mpq(1)
                ineq.append((row, -hi[j]))
        elif hi[j] is not None:
            shift[j] = hi[j]
            cols.append((j, -1))
        else:
            cols.append((j, 1))
            cols.append((j, -1))

    def to_cols(row):
        rc, rk = row
        rk = rk + sum((rc[j] * shift[j] for j in range(n) if rc[j] != 0), _ZERO)
        return [rc[j] * s for j, s in cols], rk

    rows = [to_cols(r) for r in ineq]
    cobj, kobj = to_cols(obj)
    y = _simplex([r for r, _ in rows], [-k for _, k in rows], cobj)
    x = list(shift)
    for (j, s), v in zip(cols, y):
        x[j] += s * v
    for j, expr, econst in reversed(subst):
        x[j] = econst + sum((e * x[i] for i, e in enumerate(expr) if e != 0), _ZERO)
    value = sum((_q(ci) * xi for ci, xi in zip(c, x)), _ZERO)
    return _frac(value), [_frac(v) for v in x]


def _simplex(A, b, c) -> list:
    """``max c.y`` s.t. ``A y <= b``, ``y >= 0``; two phases, Bland's rule."""
    m, n = len(A), len(c)
    neg = [i for i in range(m) if b[i] < 0]
    # columns: y (n), slacks (m), artificials (len(neg)), then rhs
    width = n + m + len(neg)
    T = []
    basis = []
    art_of = {i: n + m + k for k, i in enumerate(neg)}
    for i in range(m):
        row = [_ZERO] * (width + 1)
        sign = -1 if i in art_of else 1
        for j in range(n):
            row[j] = sign * A[i][j]
        row[n + i] = mpq(sign)
        row[width] = sign * b[i]
        if i in art_of:
            row[art_of[i]] = mpq(1)
            basis.append(art_of[i])
        else:
            basis.append(n + i)
        T.append(row)

    def run(cost, allowed):
        # reduced costs for maximising cost.z over the current basis
        while True:
            z = [_ZERO] * (width + 1)
            for i, bi in enumerate(basis):
                cb = cost[bi]
                if cb != 0:
                    Ti = T[i]
                    for j in range(width + 1):
                        if Ti[j] != 0:
                            z[j] += cb * Ti[j]
            enter = next((j for j in range(width) if allowed(j) and cost[j] - z[j] > 0), None)
            if enter is None:
                return z[width]
            best, leave = None, None
            for i in range(m):
                a = T[i][enter]
                if a > 0:
                    ratio = T[i][width] / a
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                raise Unbounded
            _pivot(T, basis, leave, enter)

    if neg:
        phase1 = [_ZERO] * width
        for k in art_of.values():
            phase1[k] = mpq(-1)
        if run(phase1, lambda j: True) < 0:
            raise Infeasible
        # drive remaining (zero-valued) artificials out of the basis
        for i in range(m):
            if basis[i] >= n + m:
                j = next((j for j in range(n + m) if T[i][j] != 0), None)
                if j is not None:
                    _pivot(T, basis, i, j)
    cost = list(c) + [_ZERO] * (width - n)
    run(cost, lambda j: j < n + m)
    y = [_ZERO] * n
    for i, bi in enumerate(basis):
        if bi < n:
            y[bi] = T[i][width]
    return y


def _pivot(T, basis, r, col):
    Tr = T[r]
    p = Tr[col]
    if p != 1:
        T[r] = Tr = [v / p for v in Tr]
    nz = [j for j, v in enumerate(Tr) if v != 0]
    for i, Ti in enumerate(T):
        if i != r:
            f = Ti[col]
            if f != 0:
                for j in nz:
                    Ti[j] -= f * Tr[j]
    basis[r] = col
