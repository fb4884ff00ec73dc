"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL ...`` line (visible
with ``-s``) and asserts the outcome.  Tolerances: equivalence is exact
(mutual entailment); runtime limits are wall-clock seconds measured in
process after the parser is built.
"""

from __future__ import annotations

import itertools
import random
import time
from fractions import Fraction

from oracles import ackermann_sat, interval_exists, lra_feasible
from pvsynth import logic as L
from pvsynth import parse_problem, sysver as S
from pvsynth.engine import Options, plan_levels
from pvsynth.ground import SAT, UNSAT, check_ground_sat
from pvsynth.locality import ExtensionLevel, certificate, hierarchical_reduce
from pvsynth.qe import eliminate
from pvsynth.symelim import equivalent

LIMITS = {1: 1.0, 2: 1.0, 3: 2.0, 4: 5.0, 5: 2.0, 6: 2.0}
N_ACKERMANN = 200
N_QE, QE_SAMPLES = 100, 200


def report(n: int, ok: bool, detail: str = "") -> None:
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"criterion {n}: {detail}"


def formula_in(problem, text: str, timed_vars=()) -> L.Formula:
    """Parse ``text`` against the signature of ``problem``.

    ``timed_vars`` are continuous variables, read as functions of time.
    """
    from pvsynth.specfile import _sig_text

    lines = _sig_text(problem.signature)
    for x in timed_vars:
        lines = [f"  {x} : real -> real;" if ln.strip() == f"{x} : real;" else ln for ln in lines]
    src = "\n".join(lines) + f"\ninvariant {text};\n"
    return parse_problem(src).invariant


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def test_criterion_1_watertank(load):
    fixed = load("watertank")
    open_ = load("watertank_open")
    (chk, syn), dt = timed(lambda: (S.check_invariant(fixed), S.synthesize_constraint(open_)))
    golden = formula_in(open_, "in <= out & in <= Lo - La")
    fw, bw = equivalent(syn.constraint, golden, plan_levels(open_))
    ok = chk.status == S.HOLDS and syn.status == "ok" and fw and bw and dt < LIMITS[1]
    report(1, ok, f"check={chk.status} equiv={fw and bw} time={dt:.2f}s")


def test_criterion_2_inflow(load):
    p = load("inflow")
    syn, dt = timed(lambda: S.synthesize_constraint(p))
    golden = formula_in(p, "(forall s:int. in(s) - out <= 0) & (forall s:int. in(s) <= Lo - La)")
    gamma0 = [formula_in(p, "La < Lo"), formula_in(p, "forall s:int. in(s) > 0")]
    fw, bw = equivalent(syn.constraint, golden, plan_levels(p), premises=gamma0)
    ok = syn.status == "ok" and fw and bw and syn.weakest and dt < LIMITS[2]
    report(2, ok, f"equiv={fw and bw} weakest={syn.weakest} time={dt:.2f}s")


def test_criterion_3_maxarray(load):
    full = load("maxarray")
    open_ = load("maxarray_open")
    (chk, syn), dt = timed(lambda: (S.check_invariant(full), S.synthesize_constraint(open_, vc="init")))
    golden = formula_in(open_, "n >= 1 & vmin <= vmax & vmin <= m")
    fw, bw = equivalent(syn.constraint, golden, plan_levels(open_))
    ok = chk.status == S.HOLDS and syn.status == "ok" and fw and bw and dt < LIMITS[3]
    report(3, ok, f"check={chk.status} init-constraint={L.format_formula(syn.constraint)} "
                  f"ours|=golden={fw} golden|=ours={bw} time={dt:.2f}s")


def _sorted_insert_golden(p):
    return formula_in(p, "(forall x:int. 0 <= x & x < ub -> a(x) <= a(x + 1)) & "
                         "(forall x:int. 0 <= x & x <= ub & x < i0 -> a(x) <= c) & "
                         "(forall x:int. 0 <= x & x <= ub & i0 <= x -> c <= a(x))")


def _bounded_models(ub_max=3, values=(0, 1, 2)):
    for ub in range(ub_max + 1):
        for i0 in range(0, ub + 2):
            for arr in itertools.product(values, repeat=ub + 1):
                for c in values:
                    yield ub, i0, arr, c


def _eval_insert(phi, ub, i0, arr, c):
    env = {L.App("ub", (), L.INT): Fraction(ub), L.App("i0", (), L.INT): Fraction(i0),
           L.App("c", (), L.REAL): Fraction(c)}
    funcs = {"a": lambda k: arr[int(k)] if 0 <= k <= ub else 100 + int(k)}
    return L.evaluate(phi, env, domain={"int": range(-2, ub + 4)}, funcs=funcs)


def test_criterion_4_insert(load):
    p = load("insert_open")
    syn, dt = timed(lambda: S.synthesize_constraint(p))
    golden = _sorted_insert_golden(p)
    assume = formula_in(p, "0 <= i0 & i0 <= ub + 1")
    plan = plan_levels(p)
    from pvsynth.symelim import entails

    bw = entails([assume, golden], syn.constraint, plan)
    # the converse needs induction over indices: bounded exhaustive check
    fw = all(_eval_insert(golden, *m) for m in _bounded_models() if _eval_insert(syn.constraint, *m))
    ok = syn.status == "ok" and fw and bw and dt < LIMITS[4]
    report(4, ok, f"golden|=ours={bw} ours|=golden(bounded)={fw} time={dt:.2f}s")


def test_criterion_5_heater_pha(load):
    p = load("heater_pha")
    syn, dt = timed(lambda: S.synthesize_constraint(p, vc="flow:normal"))
    golden = formula_in(p, "forall c:real. -k * (x(c) - f(c)) <= 0 | TM <= Tm", timed_vars=["x"])
    prem = [formula_in(p, "Tm < TM")]
    fw, bw = equivalent(syn.constraint, golden, plan_levels(p), premises=prem)
    ok = syn.status == "ok" and fw and bw and dt < LIMITS[5]
    report(5, ok, f"constraint={L.format_formula(syn.constraint)} equiv={fw and bw} time={dt:.2f}s")


def test_criterion_6_tanks(load):
    p = load("tanks")
    syn, dt = timed(lambda: S.synthesize_constraint(p))
    golden = formula_in(p, "forall i:int. (i = 1 -> in - out(1) <= 0) & (i > 1 -> out(i - 1) - out(i) <= 0)")
    fw, bw = equivalent(syn.constraint, golden, plan_levels(p))
    ok = syn.status == "ok" and fw and bw and dt < LIMITS[6]
    report(6, ok, f"constraint={L.format_formula(syn.constraint)} equiv={fw and bw} time={dt:.2f}s")


# --------------------------------------------------------------------------
# property suites with fixed seeds


def random_euf_instance(rng: random.Random):
    """Ground clauses over at most three function symbols and six ground terms."""
    consts = [L.App(n, (), L.REAL) for n in "abc"[: rng.randint(1, 3)]]
    funs = rng.sample([("f", 1), ("g", 1), ("h", 2)], rng.randint(1, 3))
    terms = set()
    want = rng.randint(2, 6)
    for _ in range(4 * want):
        fn, ar = rng.choice(funs)
        terms.add(L.App(fn, tuple(rng.choice(consts) for _ in range(ar)), L.REAL))
        if len(terms) >= want:
            break
    pool = sorted(terms, key=lambda t: t.key()) + consts
    clauses = []
    for _ in range(rng.randint(2, 5)):
        lits = []
        for _ in range(rng.randint(1, 2)):
            p = L.Poly.const(rng.randint(-2, 2))
            for t in rng.sample(pool, rng.randint(1, 2)):
                p = p + L.as_poly(t).scale(rng.choice([-1, 1, 2]))
            r = L.make_rel(rng.choice(["<=", "<", "="]), p)
            if isinstance(r, L.Rel):
                lits.append(r)
        if lits:
            clauses.append(frozenset(lits))
    return clauses, consts, {fn for fn, _ in funs}


def test_criterion_7_ackermann_oracle():
    rng = random.Random(7)
    disagree = []
    for k in range(N_ACKERMANN):
        clauses, consts, syms = random_euf_instance(rng)
        level = ExtensionLevel(1, frozenset(syms), [], certificate("free"))
        red = hierarchical_reduce([level], clauses, names=L.NameSupply())
        ours = check_ground_sat(red.clauses).status
        ref = SAT if ackermann_sat(clauses, consts) else UNSAT
        if ours != ref:
            disagree.append((k, ours, ref, [L.format_clause(c) for c in clauses]))
    report(7, not disagree, f"{N_ACKERMANN} instances, {len(disagree)} disagreements {disagree[:1]}")


def _rand_q(rng):
    return Fraction(rng.randint(-8, 8), rng.randint(1, 3))


def random_qe_instance(rng: random.Random):
    x, y = L.Var("x", L.REAL), L.Var("y", L.REAL)
    p, q = L.App("p", (), L.REAL), L.App("q", (), L.REAL)
    bound = [x] if rng.random() < 0.5 else [x, y]
    syms = bound + [p, q]

    def atom():
        poly = L.Poly.const(rng.randint(-3, 3))
        for s in syms:
            c = rng.randint(-2, 2)
            if c:
                poly = poly + L.as_poly(s).scale(c)
        r = L.make_rel(rng.choice(["<=", "<", "="] if rng.random() < 0.2 else ["<=", "<"]), poly)
        return r if isinstance(r, L.Rel) else L.rel("<=", x, p)

    cubes = [L.conj(*[atom() for _ in range(rng.randint(1, 4))]) for _ in range(rng.randint(1, 2))]
    body = L.disj(*cubes)
    return L.exists(bound, body), bound, body, (p, q)


def _oracle_exists(bound, body, env) -> bool:
    for cube in L.to_dnf(body):
        sub = [L.replace_terms(a, {k: L.Poly.const(v) for k, v in env.items()}) for a in cube]
        if any(s == L.FALSE for s in sub):
            continue
        sub = [s for s in sub if s != L.TRUE]
        if len(bound) == 1:
            ok = interval_exists(bound[0], sub, {})
        else:
            ok = lra_feasible(sub)
        if ok:
            return True
    return False


def _ground_vars(body, bound):
    """Rename bound variables to constants so that the oracle treats them as unknowns."""
    sigma = {v: L.App(f"_v{v.name}", (), v.sort) for v in bound}
    return L.substitute(body, sigma), [sigma[v] for v in bound]


def test_criterion_8_qe_soundness():
    rng = random.Random(8)
    bad = []
    for k in range(N_QE):
        phi, bound, body, free = random_qe_instance(rng)
        out = eliminate(phi)
        gbody, gbound = _ground_vars(body, bound)
        for _ in range(QE_SAMPLES):
            env = {s: _rand_q(rng) for s in free}
            want = _oracle_exists(gbound, gbody, env)
            got = L.evaluate(out, env)
            if want != got:
                bad.append((k, L.format_formula(phi), {s.fn: str(v) for s, v in env.items()}))
                break
    report(8, not bad, f"{N_QE} eliminations x {QE_SAMPLES} samples, {len(bad)} disagreements {bad[:1]}")


TRANSITION = ["watertank", "watertank_open", "inflow", "maxarray", "maxarray_open", "insert"]
SYNTH = TRANSITION + ["insert_open", "thermostat", "heater_plha", "heater_pha", "tanks"]


def test_criterion_9_consistency(load):
    violations = []
    opts = Options()
    for name in SYNTH:
        p = load(name)
        syn = S.synthesize_constraint(p, opts)
        if syn.status != "ok":
            violations.append(f"{name}: synthesis {syn.reason}")
            continue
        strengthened = S.with_assumptions(p, syn.constraint)
        back = S.check_invariant(strengthened, opts)
        if back.status != S.HOLDS:
            violations.append(f"{name}: feedback {back.status} {back.reason()}")
        if name in TRANSITION and S.check_invariant(p, opts).status == S.HOLDS:
            # bmc(p, 5) decides every depth 0..5
            r = S.bmc(p, 5, opts)
            if r.status != S.HOLDS or len(r.vcs) != 6:
                violations.append(f"{name}: bmc {r.status} {r.reason()}")
    report(9, not violations, f"{len(SYNTH)} fixtures, {len(violations)} violations {violations[:2]}")
