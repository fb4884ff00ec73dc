from fractions import Fraction

import pytest

from helpers import c, formula
from pvsynth import logic as L
from pvsynth import sysver as S
from pvsynth.engine import LevelPlan, plan_levels
from pvsynth.symelim import (entails, equality_resolution, equivalent, simplify_clauses, symbol_eliminate,
                             tidy_vars)

EMPTY = LevelPlan({}, {}, set())


def test_linear_elimination_of_state():
    # exists L. L <= La & L + in > Lo  ; constraint must exclude it
    goal = formula("L <= La & L + in > Lo", "L, La, Lo, in : real;")
    r = symbol_eliminate(goal, EMPTY, ["La", "Lo", "in"])
    assert r.status == "ok" and r.weakest
    want = formula("La + in <= Lo", "La, Lo, in : real;")
    assert all(equivalent(r.constraint, want, EMPTY))


def test_classification_traced(load):
    p = load("inflow")
    syn = S.synthesize_constraint(p)
    cls = [part.trace["classification"] for part in syn.parts if "classification" in part.trace]
    assert cls
    assert any(k["c_f"] or k["c_p"] for k in cls)


def test_parameters_only_in_result(load):
    for name in ("watertank_open", "inflow", "maxarray_open", "insert_open"):
        p = load(name)
        syn = S.synthesize_constraint(p)
        used = {a.fn for a in L.formula_apps(syn.constraint)}
        assert used <= set(p.params), (name, used)


def test_equality_resolution():
    x = L.Var("x", L.REAL)
    y = c("y")
    cl = frozenset([L.rel("<", x, y), L.rel("<", y, x), L.rel("<=", x, 3)])  # x != y | x <= 3
    assert equality_resolution(cl) == frozenset([L.rel("<=", y, 3)])


def test_tidy_vars_renames_deterministically():
    v = L.Var("d_0", L.INT)
    cl = frozenset([L.rel("<=", v, c("n", L.INT))])
    assert {w.name for w in L.clause_vars(tidy_vars(cl))} == {"d"}
    # a clash with a constant keeps the original name
    clash = frozenset([L.rel("<=", v, c("d", L.INT))])
    assert tidy_vars(clash) == clash


def test_simplification_uses_assumptions():
    cls = [frozenset([L.rel("<=", c("p"), 0), L.rel("<=", c("q"), 0)])]
    out = simplify_clauses(cls, [formula("p > 0", "p, q : real;")])
    assert out == [frozenset([L.rel("<=", c("q"), 0)])]


def test_entails_by_instantiation():
    decls = "p : real; f : real -> real;"
    strong = formula("forall u:real. f(u) <= p", decls)
    weak = formula("forall u:real. f(u) <= p + 1", decls)
    plan = LevelPlan({"f": 1}, {}, set())
    assert entails([strong], weak, plan)
    assert not entails([weak], strong, plan)


def test_weakest_needs_exact_vcs(load):
    assert S.synthesize_constraint(load("heater_plha")).weakest
    assert not S.synthesize_constraint(load("heater_pha")).weakest


def test_maxarray_init_constraint(load):
    syn = S.synthesize_constraint(load("maxarray_open"), vc="init")
    p = load("maxarray_open")
    want = formula("n > 0 & (vmax <= m | vmax < vmin)", "n : int; m, vmin, vmax : real;")
    assert all(equivalent(syn.constraint, want, plan_levels(p)))
