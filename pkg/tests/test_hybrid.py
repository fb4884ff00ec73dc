import random
from fractions import Fraction

import pytest

from helpers import c
from pvsynth import ProblemError, logic as L, parse_problem
from pvsynth import sysver as S
from pvsynth.hybrid import MV_UNSUPPORTED, at_time, hybrid_vcs, slope_hints, underflow

THERMO_HEAD = "functions { x : real; }\n"


def lha(modes: str, invariant: str, kind="lha", extra="") -> str:
    return f"{THERMO_HEAD}{extra}system hybrid {kind} {{\n  vars x;\n{modes}\n}}\ninvariant {invariant};\n"


def test_thermostat_vcs(load):
    p = load("thermostat")
    vcs = hybrid_vcs(p)
    assert sorted(v.name for v in vcs) == sorted(
        ["init:heat", "init:cool", "flow:heat", "flow:cool", "jump:off", "jump:on"])
    r = S.check_invariant(p)
    assert r.status == S.HOLDS and all(v.status == S.HOLDS for v in r.vcs)


def test_slope_form_of_interval_flow(load):
    p = load("thermostat")
    ha = p.system
    t0, t1 = c("t0"), c("t1")
    uf = underflow(ha, ha.modes[0], set(), t0, t1)
    x0, x1 = (L.App("x", (t,), L.REAL) for t in (t0, t1))
    env = {t0: Fraction(0), t1: Fraction(2)}
    for dx, ok in [(Fraction(1), False), (Fraction(2), True), (Fraction(4), True), (Fraction(9, 2), False)]:
        env.update({x0: Fraction(0), x1: dx})
        assert L.evaluate(uf, env) == ok


def test_strict_flow_is_rejected():
    src = lha("  mode m { inv x <= 1; flow dot(x) < 1; init x = 0; }", "x <= 1")
    with pytest.raises(ProblemError):
        hybrid_vcs(parse_problem(src))


def test_state_dependent_flow_is_rejected_for_lha():
    src = lha("  mode m { inv x <= 1; flow dot(x) <= x; init x = 0; }", "x <= 1")
    with pytest.raises(ProblemError):
        hybrid_vcs(parse_problem(src))


def test_trivial_invariant_holds(load):
    p = load("thermostat")
    import dataclasses

    r = S.check_invariant(dataclasses.replace(p, invariant=L.TRUE))
    assert r.status == S.HOLDS


def test_too_strong_invariant_fails_with_replayable_segment(load):
    import dataclasses

    p = load("thermostat")
    strong = dataclasses.replace(p, invariant=L.conj(L.rel("<=", 17, c("x")), L.rel("<=", c("x"), 22)))
    r = S.check_invariant(strong)
    assert r.status == S.FAILS
    bad = next(v for v in r.vcs if v.name == "flow:cool" and v.status == S.FAILS)
    m = bad.model
    t0, t1 = m["t0"], m["t1"]
    fmt = lambda q: str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
    x0, x1 = m[f"x({fmt(t0)})"], m[f"x({fmt(t1)})"]
    slope = (x1 - x0) / (t1 - t0)
    assert -2 <= slope <= -1 and 17 <= x0 <= 22 and x1 >= 16 and not 17 <= x1


def test_simulated_runs_stay_inside(load):
    # random runs of the controller: straight segments with admissible slopes
    rng = random.Random(3)
    for _ in range(1000):
        mode, x = "heat", Fraction(18)
        for _ in range(20):
            if mode == "heat":
                rate = Fraction(rng.randint(2, 4), 2)
                x = min(Fraction(22), x + rate * Fraction(rng.randint(1, 8), 4))
                if x >= 21 and rng.random() < 0.7:
                    mode = "cool"
            else:
                rate = -Fraction(rng.randint(2, 4), 2)
                x = max(Fraction(16), x + rate * Fraction(rng.randint(1, 8), 4))
                if x <= 17 and rng.random() < 0.7:
                    mode = "heat"
            assert 16 <= x <= 22


def test_multi_variable_pha_is_unknown():
    src = ("functions { x, y, k : real; }\nparams k;\nsystem hybrid pha {\n  vars x, y;\n"
           "  mode m { inv x <= 1; flow dot(x) = -k * x; init x = 0 & y = 0; }\n}\ninvariant x <= 1;\n")
    p = parse_problem(src)
    r = S.check_invariant(p)
    assert r.status == S.UNKNOWN
    assert any(v.reason == MV_UNSUPPORTED for v in r.vcs)


def test_pha_flow_is_never_a_counterexample(load):
    r = S.check_invariant(load("heater_pha"))
    flows = [v for v in r.vcs if v.name.startswith("flow:")]
    assert flows and all(v.status != S.FAILS for v in flows)


def test_sign_hints_are_implied():
    t0, t1, a, b = c("t0"), c("t1"), c("a"), c("b")
    atom = L.make_rel("<=", L.as_poly(a) + L.as_poly(b) * (L.as_poly(t1) - L.as_poly(t0)))
    hinted = slope_hints(atom, t0, t1)
    vals = [Fraction(v) for v in (-2, -1, 0, 1, 2)]
    for av in vals:
        for bv in vals:
            env = {t0: Fraction(0), t1: Fraction(1), a: av, b: bv}
            assert L.evaluate(hinted, env) == L.evaluate(atom, env)


def test_heater_plha_fixed_control_instance(load):
    p = load("heater_plha")
    syn = S.synthesize_constraint(p)
    assert syn.status == "ok"
    q = Fraction
    env = {c("k"): q(1), c("xa"): q(15), c("xb"): q(20), c("g"): q(35), c("Tm"): q(15), c("TM"): q(20)}
    funcs = {"Ta": lambda s: q(15), "Tb": lambda s: q(20)}
    # short steps matter: include an instant 1/10 after 0
    dom = {"real": [q(-1), q(0), q(1, 10), q(1), q(2)]}
    assert L.evaluate(syn.constraint, env, domain=dom, funcs=funcs)
    # a band narrower than the mode invariant is not safe
    env[c("TM")] = q(19)
    assert not L.evaluate(syn.constraint, env, domain=dom, funcs=funcs)


TANKS_HEAD = ("functions { in, Lo : real; out : int -> real; L : int -> real; }\n"
              "params in, out, Lo;\n")


def test_single_tank_gives_inflow_bound():
    src = TANKS_HEAD + ("system family { index i; vars L;\n"
                        "  flow forall i:int. i = 1 & L'(1) = L(1) + (in - out(1)) * dt; }\n"
                        "invariant forall i:int. L(i) <= Lo;\n")
    syn = S.synthesize_constraint(parse_problem(src))
    assert syn.status == "ok"
    for inflow, out1, ok in [(1, 2, True), (2, 2, True), (3, 2, False)]:
        env = {c("in"): Fraction(inflow), c("Lo"): Fraction(5)}
        assert L.evaluate(syn.constraint, env, domain={"int": range(0, 4)},
                          funcs={"out": lambda i, o=out1: Fraction(o)}) == ok


def test_family_offset_beyond_one_is_unknown():
    src = TANKS_HEAD + ("system family { index i; vars L;\n"
                        "  flow forall i:int. L'(i) = L(i) + (out(i - 2) - out(i)) * dt; }\n"
                        "invariant forall i:int. L(i) <= Lo;\n")
    r = S.check_invariant(parse_problem(src))
    assert r.status == S.UNKNOWN and "offsets" in r.reason()


def test_at_time_reads_post_state(load):
    p = load("thermostat")
    phi = p.invariant
    t0 = c("t0")
    post = at_time(phi, ["x"], t0, post=True)
    apps = {a.fn for a in L.formula_apps(post) if a.args}
    assert apps == {"x'"}
