"""An instance whose only witnesses are irrational.

    python3 demos/irrational.py
"""

import math

from fuzzysat.formula import evaluate, parse
from fuzzysat.oracle import GridSpec, grid_search
from fuzzysat.solver import solve
from fuzzysat.translate import build_problem

cs = parse("0.5 <= x &p x <= 0.5")
print("grid witness at 1/64:", grid_search(cs, GridSpec(k=64)))

v = solve(build_problem(cs), cs)
x = v.model["x"]
print("verdict:", v.status, v.cert)
print("x =", x, "~", float(x))
print("|x - sqrt(1/2)| =", abs(float(x) - math.sqrt(0.5)))
print("|x*x - 1/2|     =", float(abs(evaluate(v.model, cs.clauses[0].body) - 0.5)))
