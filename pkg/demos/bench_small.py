"""Generate a few random clause sets per logic and time the solver on them.

    python3 demos/bench_small.py [count]
"""

import sys

from fuzzysat.bench import GenSpec, generate, logic_weights, run_suite

count = int(sys.argv[1]) if len(sys.argv) > 1 else 5
for logic in "lpg":
    spec = GenSpec(seed=42, count=count, n=4, depth=3, clauses=2, weights=logic_weights(logic))
    print(run_suite(generate(spec)), end="")
