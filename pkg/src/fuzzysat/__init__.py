"""Satisfiability of Lukasiewicz, Product and Goedel fuzzy clause sets via
mixed-integer bilinear feasibility problems."""

from .formula import (
    And, Clause, ClauseSet, Const, Implies, Logic, Not, Or, ParseError, Var,
    eval_clause, evaluate, parse, parse_formula, render, render_clauses, sat_query,
)
from .translate import Problem, build_problem, extend_valuation, restrict, to_minlp
from .solver import SolverConfig, Verdict, run_backend, solve, verify_model

__version__ = "0.1.0"


def check(text: str, cfg: SolverConfig = None) -> Verdict:
    """Parse a clause set and decide it with the native solver."""
    clauses = parse(text)
    return solve(build_problem(clauses), clauses, cfg or SolverConfig())
