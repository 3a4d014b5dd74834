"""A product-logic clause pair that is unsatisfiable, and why the bare encoding says otherwise.

    python3 demos/pathological.py
"""

from fractions import Fraction

from fuzzysat.formula import evaluate, parse
from fuzzysat.solver import solve
from fuzzysat.translate import build_problem, by_id

TEXT = "0.75 <= !p (x1 ->p x2) ->p x3 <= 0.75\n0 <= x3 <= 0.5"

cs = parse(TEXT)
P = build_problem(cs)
print(f"{len(P.vars)} variables, {len(P.integers)} binary, {len(P.constraints)} constraints")

# !p(...) is 0 or 1.  At 1 the outer implication is x3 <= 0.5, at 0 it is 1.
# Neither is 3/4, so the pair is unsatisfiable.
verdict = solve(P, cs)
print("verdict:", verdict.status, f"({verdict.stats.nodes} nodes, {verdict.stats.wall_ms:.1f} ms)")

# The constraints alone accept this point: with x1 = x2 = x3 = 0 the outer
# implication's indicator may be 1, and 0 * aux = x3 = 0 leaves aux free.
point = {"x1": 0, "x2": 0, "x3": 0,
         "x_phi@0.0.0": 1, "b@0.0.0": 0, "aux@0.0.0": 0,
         "x_phi@0.0": 0, "b@0.0": 1,
         "x_phi@0": Fraction(3, 4), "b@0": 1, "aux@0": Fraction(3, 4)}
f = by_id(P, {k: Fraction(v) for k, v in point.items()})
print("all residuals zero:", all(c.residual(f) == 0 for c in P.constraints))
print("but the formula's value there is", evaluate(point, cs.clauses[0].body))
guard = P.guards()[P.names["b@0"]]
print("guard of b@0 at that point:", f[P.names["b@0"]] - guard.value(f), "(the indicator is set on a zero guard)")
