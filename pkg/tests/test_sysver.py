from fractions import Fraction

import pytest

from helpers import c
from pvsynth import logic as L
from pvsynth import sysver as S
from pvsynth.engine import Options




def test_watertank_vcs(load):
    p = load("watertank")
    vcs = S.system_vcs(p)
    assert [v.name for v in vcs] == ["init", "normal", "drain"]
    r = S.check_invariant(p)
    assert r.status == S.HOLDS and r.case == 1


def test_open_tank_counterexample_is_real(load):
    p = load("watertank_open")
    r = S.check_invariant(p)
    assert r.status == S.FAILS
    bad = r.failed
    m = bad.model
    # e.g. normal: L <= La, L' = L + in, L <= Lo, L' > Lo
    L_, La, Lo, inflow, out = (m.get(k, 0) for k in ("L", "La", "Lo", "in", "out"))
    assert inflow > 0 and out > 0 and La < Lo and L_ <= Lo
    if bad.name == "normal":
        assert L_ <= La and L_ + inflow > Lo
    elif bad.name == "drain":
        assert L_ > La and L_ + inflow - out > Lo


def test_select_unknown_vc(load):
    with pytest.raises(KeyError):
        S.check_invariant(load("watertank"), vc="nope")


def test_feedback_closes_the_loop(load):
    p = load("watertank_open")
    syn = S.synthesize_constraint(p)
    assert syn.status == "ok" and syn.weakest
    assert S.check_invariant(S.with_assumptions(p, syn.constraint)).status == S.HOLDS


def test_maxarray_holds_and_cases(load):
    p = load("maxarray")
    assert S.check_invariant(p).status == S.HOLDS
    assert S.detect_case(p) == 2
    assert S.detect_case(load("insert")) == 3


def test_init_golden_is_not_sufficient(load):
    """n=1, vmin=0, vmax=2, m=1, a(1)=2 meets n>=1, vmin<=vmax, vmin<=m and the
    array bounds, yet the initial state violates the invariant (a(1) > max = m)."""
    p = load("maxarray_open")
    env = {c("n", L.INT): Fraction(1), c("vmin"): Fraction(0), c("vmax"): Fraction(2), c("m"): Fraction(1),
           c("i", L.INT): Fraction(1), c("max"): Fraction(1)}
    funcs = {"a": lambda k: Fraction(2)}
    dom = {"int": range(-1, 4)}
    golden = [L.rel(">=", c("n", L.INT), 1), L.rel("<=", c("vmin"), c("vmax")), L.rel("<=", c("vmin"), c("m"))]
    assert all(L.evaluate(g, env, domain=dom, funcs=funcs) for g in golden)
    assert all(L.evaluate(ax, env, domain=dom, funcs=funcs) for ax in S.background(p))
    assert L.evaluate(p.system.init, env, domain=dom, funcs=funcs)
    assert not L.evaluate(p.invariant, env, domain=dom, funcs=funcs)
    # and ours rules it out
    syn = S.synthesize_constraint(p, vc="init")
    assert not L.evaluate(syn.constraint, env, domain=dom, funcs=funcs)


def test_bmc_finds_shortest_violation(load):
    r = S.bmc(load("insert"), 3)
    assert r.status == S.FAILS
    assert [v.status for v in r.vcs] == [S.HOLDS, S.FAILS]


def test_bmc_watertank(load):
    r = S.bmc(load("watertank"), 4)
    assert r.status == S.HOLDS and len(r.vcs) == 5
    r = S.bmc(load("watertank_open"), 2)
    assert r.status == S.FAILS


def test_bmc_rejects_hybrid(load):
    with pytest.raises(ValueError):
        S.bmc(load("thermostat"), 1)
    with pytest.raises(ValueError):
        S.bmc(load("watertank"), -1)


def test_parallel_jobs_same_answer(load):
    p = load("insert_open")
    a = S.check_invariant(p)
    b = S.check_invariant(p, Options(jobs=3))
    assert [(v.name, v.status) for v in a.vcs] == [(v.name, v.status) for v in b.vcs]


def test_insert_feedback(load):
    p = load("insert_open")
    syn = S.synthesize_constraint(p)
    assert syn.status == "ok"
    assert S.check_invariant(S.with_assumptions(p, syn.constraint)).status == S.HOLDS
