"""Outward-rounded interval arithmetic on float pairs.

Sums use an error-free transformation so that exactly representable results
(most of them here: the coefficients are small integers and the boxes start
at [0, 1]) stay exact, which matters for refuting boundary cases such as a
guard whose supremum is exactly zero.  Products and quotients are widened by
one ulp unless an operand makes them trivially exact.
"""

from __future__ import annotations

import math
from fractions import Fraction

INF = math.inf
_next = math.nextafter


def down(x: float) -> float:
    return _next(x, -INF)


def up(x: float) -> float:
    return _next(x, INF)


def add_down(a: float, b: float) -> float:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return _next(s, -INF) if err < 0 else s


def add_up(a: float, b: float) -> float:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return _next(s, INF) if err > 0 else s


def _exact_mul(a: float, b: float) -> bool:
    return a == 0.0 or b == 0.0 or a in (1.0, -1.0) or b in (1.0, -1.0)


def mul_down(a: float, b: float) -> float:
    p = a * b
    return p if _exact_mul(a, b) else _next(p, -INF)


def mul_up(a: float, b: float) -> float:
    p = a * b
    return p if _exact_mul(a, b) else _next(p, INF)


def div_down(a: float, b: float) -> float:
    q = a / b
    return q if a == 0.0 or b in (1.0, -1.0) else _next(q, -INF)


def div_up(a: float, b: float) -> float:
    q = a / b
    return q if a == 0.0 or b in (1.0, -1.0) else _next(q, INF)


def sqrt_down(a: float) -> float:
    r = math.sqrt(a)
    return r if a in (0.0, 1.0) else _next(r, -INF)


def sqrt_up(a: float) -> float:
    r = math.sqrt(a)
    return r if a in (0.0, 1.0) else _next(r, INF)


def mul(alo: float, ahi: float, blo: float, bhi: float) -> tuple[float, float]:
    if alo >= 0.0 and blo >= 0.0:
        return mul_down(alo, blo), mul_up(ahi, bhi)
    cands_lo = (mul_down(alo, blo), mul_down(alo, bhi), mul_down(ahi, blo), mul_down(ahi, bhi))
    cands_hi = (mul_up(alo, blo), mul_up(alo, bhi), mul_up(ahi, blo), mul_up(ahi, bhi))
    return min(cands_lo), max(cands_hi)


def scale(c: float, lo: float, hi: float) -> tuple[float, float]:
    if c >= 0.0:
        return mul_down(c, lo), mul_up(c, hi)
    return mul_down(c, hi), mul_up(c, lo)


def enclose(q: Fraction) -> tuple[float, float]:
    """Tightest float interval containing the rational ``q``."""
    f = float(q)
    if Fraction(f) == q:
        return f, f
    if Fraction(f) < q:
        return f, up(f)
    return down(f), f
