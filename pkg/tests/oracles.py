"""Reference procedures used by the tests.

They share only the term/formula data structures with the package and
are written for clarity, not speed: textbook Fourier-Motzkin over
Fractions, Ackermann expansion by enumerating argument arrangements,
brute-force instantiation and truth tables.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from pvsynth import logic as L

# --------------------------------------------------------------------------
# linear real feasibility


def _lin(rel: L.Rel):
    """``(coeffs, const, op)`` of a linear Rel, atoms as dict keys."""
    coeffs, const = {}, Fraction(0)
    for m, c in rel.poly.terms:
        if not m:
            const += c
        elif len(m) == 1 and m[0][1] == 1:
            coeffs[m[0][0]] = coeffs.get(m[0][0], 0) + c
        else:
            coeffs[m] = coeffs.get(m, 0) + c  # opaque product
    return coeffs, const, rel.op


def lra_feasible(rels) -> bool:
    """Is the conjunction of linear ``Rel`` atoms satisfiable over the reals?"""
    rows = []
    for r in rels:
        if r == L.TRUE:
            continue
        if r == L.FALSE:
            return False
        rows.append(_lin(r))
    # equalities by substitution
    while True:
        eq = next((row for row in rows if row[2] == "=" and row[0]), None)
        if eq is None:
            break
        rows.remove(eq)
        cs, k, _ = eq
        v = next(iter(sorted(cs, key=repr)))
        a = cs[v]
        # v = -(k + sum_{w != v} c_w w) / a
        sub = {w: -c / a for w, c in cs.items() if w != v}
        subk = -k / a
        new = []
        for c2, k2, op2 in rows:
            if v in c2:
                f = c2[v]
                c3 = {w: c for w, c in c2.items() if w != v}
                for w, c in sub.items():
                    c3[w] = c3.get(w, 0) + f * c
                c3 = {w: c for w, c in c3.items() if c != 0}
                new.append((c3, k2 + f * subk, op2))
            else:
                new.append((c2, k2, op2))
        rows = new
    for cs, k, op in rows:
        if not cs and not _holds(op, k):
            return False
    rows = [r for r in rows if r[0]]
    variables = sorted({v for r in rows for v in r[0]}, key=repr)
    for v in variables:
        lower, upper, keep = [], [], []
        for r in rows:
            c = r[0].get(v, 0)
            if c > 0:
                upper.append(r)
            elif c < 0:
                lower.append(r)
            else:
                keep.append(r)
        for lo in lower:
            for up in upper:
                a, b = -lo[0][v], up[0][v]
                cs = {}
                for w, c in lo[0].items():
                    cs[w] = cs.get(w, 0) + c * b
                for w, c in up[0].items():
                    cs[w] = cs.get(w, 0) + c * a
                cs = {w: c for w, c in cs.items() if c != 0 and w != v}
                k = lo[1] * b + up[1] * a
                op = "<" if "<" in (lo[2], up[2]) else "<="
                if not cs:
                    if not _holds(op, k):
                        return False
                    continue
                keep.append((cs, k, op))
        rows = keep
        if len(rows) > 4000:
            raise RuntimeError("oracle blowup")
    return all(_holds(op, k) for cs, k, op in rows if not cs)


def _holds(op, k) -> bool:
    return k <= 0 if op == "<=" else (k < 0 if op == "<" else k == 0)


def clauses_sat(clauses) -> bool:
    """Satisfiability of ground clauses by depth-first literal choice."""
    clauses = [sorted(c) for c in clauses]

    def go(i, cube):
        if not lra_feasible(cube):
            return False
        if i == len(clauses):
            return True
        for lit in clauses[i]:
            if go(i + 1, cube + [lit]):
                return True
        return False

    if any(len(c) == 0 for c in clauses):
        return False
    return go(0, [])


# --------------------------------------------------------------------------
# Ackermann expansion


def ordered_partitions(items):
    """All weak orders of ``items`` as lists of blocks."""
    items = list(items)
    if not items:
        yield []
        return
    for k in range(1, len(items) + 1):
        for first in itertools.combinations(items, k):
            rest = [x for x in items if x not in first]
            for tail in ordered_partitions(rest):
                yield [list(first)] + tail


def ackermann_sat(clauses, consts):
    """Satisfiability of clauses with flat applications ``f(a, ...)``.

    Enumerates the arrangement of the argument constants; inside an
    arrangement equal arguments identify applications, which then behave
    as plain variables.
    """
    consts = sorted(consts, key=lambda c: c.fn)
    for blocks in ordered_partitions(consts):
        rep = {}
        order = []
        for blk in blocks:
            for c in blk:
                rep[c] = blk[0]
            order.append(blk[0])
        arr = [L.rel("<", a, b) for a, b in zip(order, order[1:])]
        arr += [L.rel("=", c, rep[c]) for c in consts if rep[c] != c]
        vars_ = {}

        def fn(s):
            if isinstance(s, L.App) and s.args:
                key = (s.fn, tuple(rep.get(L.unwrap(a), L.unwrap(a)) for a in s.args))
                if key not in vars_:
                    vars_[key] = L.App(f"ack_{len(vars_)}", (), s.sort)
                return vars_[key]
            return None

        flat = []
        for c in clauses:
            lits = []
            for lit in c:
                r = L.make_rel(lit.op, L.as_poly(L.map_term(lit.poly, fn)))
                lits.append(r)
            if any(r == L.TRUE for r in lits):
                continue
            lits = [r for r in lits if r != L.FALSE]
            flat.append(lits)
        if clauses_sat(flat + [[a] for a in arr if a != L.TRUE]):
            return True
    return False


# --------------------------------------------------------------------------
# instantiation by brute force


def brute_instances(clauses, T, symbols):
    """All ground instances of ``clauses`` whose extension terms lie in ``T``."""
    T = set(T)
    pool = set()
    for t in T:
        for a in t.args:
            pool.add(L.unwrap(a))
    out = set()
    for c in clauses:
        vs = sorted(L.clause_vars(c), key=lambda v: v.name)
        for vals in itertools.product(sorted(pool, key=lambda t: t.key()), repeat=len(vs)):
            sigma = dict(zip(vs, vals))
            inst = L.clause_substitute(c, sigma)
            if inst is None:
                continue
            terms = set()
            for lit in inst:
                for s in L.subterms(lit.poly):
                    if isinstance(s, L.App) and s.args and s.fn in symbols:
                        terms.add(s)
            if terms <= T:
                out.add(frozenset(inst))
    return out


# --------------------------------------------------------------------------
# intervals for one-variable elimination


def interval_exists(var, cube, env) -> bool:
    """Decide ``exists var. cube`` after substituting ``env`` (one variable)."""
    lo, lo_strict, hi, hi_strict = None, False, None, False
    for r in cube:
        p = L.as_poly(r.poly)
        a, b = Fraction(0), Fraction(0)
        for m, c in p.terms:
            if not m:
                b += c
                continue
            val = c
            has = 0
            for atom, e in m:
                if atom == var:
                    has += e
                else:
                    val *= env[atom] ** e
            if has == 0:
                b += val
            elif has == 1:
                a += val
            else:
                raise ValueError("nonlinear in the eliminated variable")
        # a*var + b op 0
        if a == 0:
            if not _holds(r.op, b):
                return False
            continue
        bound = -b / a
        if r.op == "=":
            if lo is not None and (bound < lo or (bound == lo and lo_strict)):
                return False
            if hi is not None and (bound > hi or (bound == hi and hi_strict)):
                return False
            lo, lo_strict, hi, hi_strict = bound, False, bound, False
            continue
        strict = r.op == "<"
        if a > 0:  # var <= bound
            if hi is None or bound < hi or (bound == hi and strict):
                hi, hi_strict = bound, strict
        else:
            if lo is None or bound > lo or (bound == lo and strict):
                lo, lo_strict = bound, strict
    if lo is None or hi is None:
        return True
    return lo < hi or (lo == hi and not lo_strict and not hi_strict)
