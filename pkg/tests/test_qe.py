import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from helpers import c, formula
from oracles import interval_exists
from pvsynth import logic as L
from pvsynth.ground import UNSAT, check_ground_sat
from pvsynth.qe import NonlinearEliminationError, QETrace, eliminate, minimise_cube, simplify

P, Q = c("p"), c("q")
V = L.Var("v", L.REAL)
atoms = st.tuples(st.sampled_from(["<=", "<", "="]), st.integers(-2, 2), st.integers(-2, 2),
                  st.integers(-2, 2), st.integers(-3, 3))


def _atom(op, a, b, d, k):
    r = L.make_rel(op, L.as_poly(V).scale(a) + L.as_poly(P).scale(b) + L.as_poly(Q).scale(d) + L.Poly.const(k))
    return r if isinstance(r, L.Rel) else L.rel("<=", V, P)


VALS = [Fraction(n, 2) for n in range(-5, 6)]


@given(st.lists(atoms, min_size=1, max_size=4))
def test_single_variable_elimination(rows):
    cube = [_atom(*s) for s in rows]
    out = eliminate(L.exists([V], L.conj(*cube)))
    assert V not in L.free_vars(out)
    for p, q in itertools.product(VALS, repeat=2):
        env = {P: p, Q: q}
        sub = [L.replace_terms(a, {P: L.Poly.const(p), Q: L.Poly.const(q)}) for a in cube]
        want = all(s != L.FALSE for s in sub) and interval_exists(V, [s for s in sub if isinstance(s, L.Rel)], {})
        assert L.evaluate(out, env) == want


def test_forall_is_dual():
    phi = formula("forall u:real. u <= p -> u <= q")
    out = eliminate(phi)
    for p, q in itertools.product(VALS, repeat=2):
        assert L.evaluate(out, {P: p, Q: q}) == (p <= q)


def test_parametric_coefficient_splits_on_sign():
    # exists u. p*u = 1  <=>  p != 0
    out = eliminate(formula("exists u:real. p*u = 1"))
    for p in VALS:
        assert L.evaluate(out, {P: p}) == (p != 0)


def test_nonlinear_in_eliminated_variable():
    with pytest.raises(NonlinearEliminationError):
        eliminate(formula("exists u:real. u*u = p"))


def test_trace_records_steps():
    tr = QETrace()
    eliminate(formula("exists u:real. p <= u & u <= q"), trace=tr)
    assert tr.steps


def test_two_variables():
    out = eliminate(formula("exists u:real, w:real. p <= u & u < w & w <= q"))
    assert check_ground_sat(L.conj(out, formula("q <= p"))).status == UNSAT
    assert L.evaluate(out, {P: Fraction(0), Q: Fraction(1)})


def test_simplify_keeps_meaning():
    phi = formula("(p <= q & q <= p + 1) | (p <= q & p >= q - 1) | p > 10")
    s = simplify(phi)
    for p, q in itertools.product(VALS + [Fraction(11)], repeat=2):
        assert L.evaluate(s, {P: p, Q: q}) == L.evaluate(phi, {P: p, Q: q})


def test_minimise_cube_drops_redundant_atoms():
    cube = L.to_dnf(formula("p <= 0 & p <= 1 & q <= p"))[0]
    small = minimise_cube(sorted(cube))
    assert len(small) == 2
