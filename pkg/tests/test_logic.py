import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from helpers import c, formula
from pvsynth import logic as L

X, Y, Z = c("x"), c("y"), c("z")
ATOMS = [L.rel("<=", X, 0), L.rel("<", Y, 1), L.rel("=", L.as_poly(X) - L.as_poly(Y), 0), L.rel("<=", Z, X)]


def formulas(depth=3):
    leaf = st.sampled_from(ATOMS + [L.TRUE, L.FALSE])
    return st.recursive(leaf, lambda sub: st.one_of(
        st.lists(sub, min_size=2, max_size=3).map(lambda fs: L.conj(*fs)),
        st.lists(sub, min_size=2, max_size=3).map(lambda fs: L.disj(*fs)),
        sub.map(L.Not),
        st.tuples(sub, sub).map(lambda ab: L.Implies(*ab)),
    ), max_leaves=8)


def points():
    vals = [Fraction(v, 2) for v in range(-3, 4)]
    for xs in itertools.product(vals, repeat=3):
        yield dict(zip((X, Y, Z), xs))


@given(formulas())
def test_dnf_agrees_with_truth_table(phi):
    cubes = L.to_dnf(phi)
    for env in points():
        want = L.evaluate(phi, env)
        got = any(all(a.holds(env) for a in cube) for cube in cubes)
        assert want == got


@given(formulas())
def test_cnf_agrees_with_truth_table(phi):
    clauses = L.cnf_clauses(L.nnf(phi))
    for env in points():
        got = all(any(a.holds(env) for a in cl) for cl in clauses)
        assert L.evaluate(phi, env) == got


@given(formulas())
def test_nnf_preserves_meaning(phi):
    n = L.nnf(phi)
    for env in points():
        assert L.evaluate(phi, env) == L.evaluate(n, env)


def test_polynomials_are_canonical():
    p = L.as_poly(X) + L.as_poly(Y).scale(2) - L.as_poly(X)
    assert p == L.as_poly(Y).scale(2)
    assert L.rel("<=", X, Y) == L.rel(">=", Y, X)
    assert L.rel("<", 1, 2) == L.TRUE and L.rel("=", 1, 2) == L.FALSE


def test_negate_is_complement():
    for a in ATOMS:
        for env in points():
            assert a.holds(env) != any(b.holds(env) for b in a.negate())


def test_skolemisation_over_finite_domain():
    phi = formula("exists k:int. forall m:int. (0 <= m & m <= 2) -> a(m) <= a(k)")
    names = L.NameSupply({"a"})
    matrix, univ, consts = L.skolemize(phi, names)
    assert [v.name for v in univ] == ["m"] and len(consts) == 1
    dom = {"int": range(0, 3)}
    # a finite model of phi gives a model of the matrix with the witness read off
    for arr in itertools.product([0, 1, 2], repeat=3):
        funcs = {"a": lambda k, arr=arr: Fraction(arr[int(k)]) if 0 <= k <= 2 else Fraction(-9)}
        has = L.evaluate(phi, {}, domain=dom, funcs=funcs)
        witness = any(L.evaluate(L.forall(univ, matrix), {consts[0]: Fraction(w)}, domain=dom, funcs=funcs)
                      for w in range(3))
        assert has == witness


def test_nested_existential_needs_skolem_function():
    phi = formula("forall u:real. exists v:real. u < v")
    with pytest.raises(L.NestedSkolemError):
        L.skolemize(phi, L.NameSupply())


@pytest.mark.parametrize("text", [
    "x + 2*y <= 3",
    "forall k:int. 0 <= k & k < n -> a(k) <= a(k + 1)",
    "(exists u:real. f(u) < 0) | !(x = y)",
    "x*y - 1/2 < z -> (p <= q <-> q >= p)",
    "forall u:real, v:real. u <= v -> f(u) <= f(v)",
])
def test_format_parse_round_trip(text):
    phi = formula(text)
    again = formula(L.format_formula(phi))
    assert again == phi


def test_name_supply_avoids_taken_names():
    ns = L.NameSupply({"c", "c0"})
    a, b = ns.fresh("c"), ns.fresh("c")
    assert len({a, b, "c", "c0"}) == 4


def test_sort_mismatch_is_rejected():
    from pvsynth import ProblemError

    with pytest.raises(ProblemError):
        formula("a(x) <= 0")
