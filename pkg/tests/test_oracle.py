import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from fuzzysat.formula import Logic, eval_clause, evaluate, parse, parse_formula, sat_query, subformulas
from fuzzysat.oracle import (
    CapExceeded, GridSpec, enclosure, enumerate_feasible, enumerate_optimal, grid_search,
    indicator_guards, is_indicator_minimal, objective,
)
from fuzzysat.translate import build_problem

from strategies import clause_sets, formulas, valuations

F = Fraction
PATHOLOGICAL = "0.75 <= !p (x1 ->p x2) ->p x3 <= 0.75\n0 <= x3 <= 0.5"


def test_grid_search_examples():
    assert grid_search(parse(PATHOLOGICAL), GridSpec(k=16)) is None
    assert grid_search(parse("1 <= x |l !l x <= 1"), GridSpec(k=2)) == {"x": F(0)}
    assert grid_search(parse("0.5 <= x &p x <= 0.5"), GridSpec(k=64)) is None


def test_grid_search_order_and_cap():
    assert grid_search(parse("0.5 <= a &g b <= 0.5"), GridSpec(k=4)) == {"a": F(1, 2), "b": F(1, 2)}
    with pytest.raises(CapExceeded):
        grid_search(parse(PATHOLOGICAL), GridSpec(k=4, variable_cap=2))
    with pytest.raises(ValueError):
        GridSpec(k=0)


@settings(max_examples=200)
@given(formulas(names=("a", "b"), max_leaves=6), valuations(k=4), valuations(k=4))
def test_enclosure_contains_values(phi, v, w):
    box = {n: (min(v[n], w[n]), max(v[n], w[n])) for n in v}
    lo, hi = enclosure(phi, box)
    assert lo <= evaluate(v, phi) <= hi and lo <= evaluate(w, phi) <= hi


def test_optimal_product_negation():
    P = build_problem(parse("1 <= !p x <= 1"))
    found = enumerate_optimal(P, 4)
    assert found
    for f, numeric in found:
        assert not numeric
        assert (f["b@0"], f["x"], f["x_phi@0"]) == (0, 0, 1)


def test_trivial_problem():
    P = build_problem(parse("0 <= x <= 1"))
    feasible = enumerate_feasible(P, 4)
    assert sorted(f["x"] for f, _ in feasible) == [F(i, 4) for i in range(5)]
    assert enumerate_optimal(P, 4) == feasible
    assert all(objective(P, f) == 0 for f, _ in feasible)


def test_lukasiewicz_implication_with_fixed_antecedent():
    P = build_problem(parse("1 <= a ->l b <= 1\n1 <= a <= 1"))
    found = enumerate_optimal(P, 4)
    assert found
    assert all(f["b"] == 1 and f["b@0"] == 0 for f, _ in found)


def test_irrational_points_are_flagged():
    P = build_problem(parse("0.5 <= x &p x <= 0.5"))
    found = enumerate_feasible(P, 4, fixed={})
    assert all(numeric for _, numeric in found)
    assert all(abs(f["x"] ** 2 - F(1, 2)) < F(1, 10 ** 9) for f, _ in found)


def test_sum_optimality_admits_a_wrong_value():
    # !p !p a at a = 0: raising the inner indicator lets the outer one drop
    P = build_problem(sat_query(parse_formula("!p !p a"), 0))
    found = enumerate_optimal(P, 2, fixed={"a": F(0)})
    values = {f["x_phi@0"] for f, _ in found}
    assert values == {F(0), F(1)}
    minimal = enumerate_optimal(P, 2, criterion="indicator", fixed={"a": F(0)})
    assert {f["x_phi@0"] for f, _ in minimal} == {F(0)}


def test_indicator_guards_and_minimality():
    P = build_problem(sat_query(parse_formula("a ->l b"), 0))
    guards = indicator_guards(P)
    assert set(guards) == {"b@0"}
    f = {"a": F(1, 2), "b": F(1, 2), "x_phi@0": F(1), "b@0": F(1)}
    assert not is_indicator_minimal(P, f, guards)
    f["b@0"] = F(0)
    assert is_indicator_minimal(P, f, guards)


@settings(max_examples=40, deadline=None)
@given(formulas(names=("a", "b"), max_leaves=3), valuations(k=4))
def test_indicator_minimal_points_carry_true_values(phi, v):
    P = build_problem(sat_query(phi, 0))
    found = enumerate_optimal(P, 4, criterion="indicator", fixed={n: v[n] for n in P.sources})
    assert found
    for f, numeric in found:
        for path, node in subformulas(phi):
            value = evaluate(v, node)
            got = f[P.vars[P.origin[path]].name]
            assert got == value if not numeric else abs(got - value) < F(1, 10 ** 6)


def test_caps_and_criterion():
    P = build_problem(parse("0 <= " + " ->l ".join(["a"] * 10) + " <= 1"))
    with pytest.raises(CapExceeded):
        enumerate_feasible(P, 2)
    with pytest.raises(ValueError):
        enumerate_optimal(build_problem(parse("0 <= x <= 1")), 2, criterion="max")


def brute_force(cs, k):
    names = sorted(cs.vocabulary)
    for point in itertools.product([F(i, k) for i in range(k + 1)], repeat=len(names)):
        v = dict(zip(names, point))
        if all(eval_clause(v, c) for c in cs):
            return v
    return None


@settings(max_examples=150, deadline=None)
@given(clause_sets(names=("a", "b", "c"), max_clauses=2), st.sampled_from([1, 3, 4, 6]))
def test_grid_search_is_first_brute_force_point(cs, k):
    assert grid_search(cs, GridSpec(k=k)) == brute_force(cs, k)


@settings(max_examples=60, deadline=None)
@given(clause_sets(names=("a", "b", "c"), logics=[Logic.LUKASIEWICZ, Logic.GOEDEL], max_clauses=2))
def test_integer_sweep_matches_brute_force(cs):
    assert grid_search(cs, GridSpec(k=5)) == brute_force(cs, 5)


@settings(max_examples=80, deadline=None)
@given(clause_sets(names=("a", "b", "c"), logics=[Logic.PRODUCT], max_clauses=2), st.sampled_from([3, 4, 7]))
def test_product_sweep_matches_brute_force(cs, k):
    assert grid_search(cs, GridSpec(k=k)) == brute_force(cs, k)


def test_product_sweep_boundary_values():
    # witnesses sitting exactly on a bound, and on the discontinuity of negation
    assert grid_search(parse("1/4 <= a &p b <= 1/4"), GridSpec(k=4)) == {"a": F(1, 4), "b": F(1)}
    assert grid_search(parse("1 <= !p (a &p b) <= 1\n1/3 <= b <= 1"), GridSpec(k=3)) == {"a": F(0), "b": F(1, 3)}
    assert grid_search(parse("1/3 <= b ->p a <= 1/3"), GridSpec(k=3)) == {"a": F(1, 3), "b": F(1)}
