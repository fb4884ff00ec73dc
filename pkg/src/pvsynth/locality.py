"""Local theory extensions: instantiation, purification and chain reduction.

An extension level is a set of clauses over a set of extension function
symbols.  For a ground goal ``G``, the level is reduced by instantiating its
clauses at the ground extension terms ``est(K, G)`` (every extension term
of an instance must belong to that set), replacing extension terms by fresh
constants and adding the congruence instances between the resulting
definitions.  Chains are reduced from the highest level down.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from . import logic as L


class NonGroundInstanceError(ValueError):
    """A clause variable does not occur below an extension symbol."""


# --------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class Certificate:
    """Locality certificate of an extension level.

    ``comp_f`` records whether the certificate guarantees that partial
    models extend to total ones with the same support, which is the side
    condition under which derived constraints are weakest.
    """

    name: str
    comp_f: bool
    waived: bool = False

    def check(self, level: "ExtensionLevel") -> list:
        return CHECKS[self.name](level)


def _check_free(level):
    bad = [c for c in level.clauses if L.clause_vars(c)]
    return [f"free level {level.level} has {len(bad)} non-ground clause(s)"] if bad else []


def _check_flat(level):
    return certify_flat_linear(level.clauses, level.symbols)


def _check_bounded(level):
    issues = certify_flat_linear(level.clauses, level.symbols)
    for c in level.clauses:
        terms = {t for t in ext_terms_of_clause(c, level.symbols) if L.term_vars(t)}
        if len(terms) > 1:
            issues.append(f"bounded clause mentions {len(terms)} extension terms: {L.format_clause(c)}")
    return issues


def _check_monotone(level):
    issues = certify_flat_linear(level.clauses, level.symbols)
    for c in level.clauses:
        terms = {t for t in ext_terms_of_clause(c, level.symbols) if L.term_vars(t)}
        if len(terms) > 2:
            issues.append(f"monotonicity clause mentions {len(terms)} extension terms: {L.format_clause(c)}")
    return issues


def _check_update(level):
    issues = []
    for c in level.clauses:
        if not L.clause_vars(c):
            continue
        terms = {t for t in ext_terms_of_clause(c, level.symbols)}
        if len(terms) != 1:
            issues.append(f"update clause must define exactly one term: {L.format_clause(c)}")
            continue
        (t,) = terms
        if not all(isinstance(L.unwrap(a), L.Var) for a in t.args):
            issues.append(f"update term {L.format_term(t)} is not flat")
    issues.extend(update_guard_obligations(level))
    return issues


def _check_asserted(level):
    return []


CHECKS = {
    "free": _check_free,
    "bounded": _check_bounded,
    "monotone": _check_monotone,
    "update": _check_update,
    "convex": _check_flat,
    "lincomb": _check_flat,
    "asserted": _check_asserted,
}

CERTIFICATES = {
    "free": Certificate("free", True),
    "bounded": Certificate("bounded", True),
    "monotone": Certificate("monotone", False),
    "update": Certificate("update", True),
    "convex": Certificate("convex", False),
    "lincomb": Certificate("lincomb", False),
    "asserted": Certificate("asserted", False, waived=True),
}

LONG_NAMES = {
    "free": "FreeFunctions",
    "bounded": "GuardedBounded",
    "monotone": "Monotone",
    "update": "UpdateRules",
    "convex": "Convexity",
    "lincomb": "LinearCombinationBounds",
    "asserted": "UserAsserted",
}


def certificate(name: str) -> Certificate:
    for short, long in LONG_NAMES.items():
        if name in (short, long):
            return CERTIFICATES[short]
    raise KeyError(f"unknown certificate {name!r}")


# --------------------------------------------------------------------------
# levels


@dataclass
class ExtensionLevel:
    level: int
    symbols: frozenset
    clauses: list
    certificate: Certificate = field(default_factory=lambda: CERTIFICATES["free"])
    closure: Callable | None = None  # term-closure hook; identity when None
    name: str = ""

    def check_certificate(self) -> list:
        return self.certificate.check(self)


def ext_terms(t: L.Term, symbols) -> list:
    return [s for s in L.subterms(t) if isinstance(s, L.App) and s.args and s.fn in symbols]


def ext_terms_of_clause(c, symbols) -> list:
    out = []
    for lit in c:
        out.extend(ext_terms(lit.poly, symbols))
    return out


def certify_flat_linear(clauses, symbols) -> list:
    """Issues preventing the clauses from being flat and linear."""
    issues = []
    for c in clauses:
        terms = [t for t in set(ext_terms_of_clause(c, symbols)) if L.term_vars(t)]
        seen_var: dict = {}
        for t in terms:
            args = [L.unwrap(a) for a in t.args]
            if not all(isinstance(a, L.Var) for a in args):
                issues.append(f"not flat: {L.format_term(t)} in {L.format_clause(c)}")
                continue
            if len(set(args)) != len(args):
                issues.append(f"not linear: repeated variable in {L.format_term(t)}")
            for a in args:
                other = seen_var.get(a)
                if other is not None and other != t:
                    issues.append(f"not linear: {a.name} occurs in {L.format_term(other)} and {L.format_term(t)}")
                seen_var[a] = t
    return issues


def update_guard_obligations(level: ExtensionLevel) -> list:
    """Pairwise disjointness of the guards of definitional update clauses."""
    from .ground import check_ground_sat

    defs = []
    for c in level.clauses:
        if not L.clause_vars(c):
            continue
        terms = set(ext_terms_of_clause(c, level.symbols))
        if len(terms) != 1:
            continue
        (t,) = terms
        if not all(isinstance(L.unwrap(a), L.Var) for a in t.args):
            continue
        heads = [lit for lit in c if lit.op == "=" and t in set(L.subterms(lit.poly))]
        if len(heads) != 1:
            continue
        defs.append((t, [lit for lit in c if lit != heads[0]]))
    issues = []
    for k, ((t1, g1), (t2, g2)) in enumerate(itertools.combinations(defs, 2)):
        if t1.fn != t2.fn:
            continue
        shared = [L.App(f"_g{k}_{i}", (), L.term_sort(a)) for i, a in enumerate(t1.args)]
        clauses = []
        for side, (t, g) in enumerate(((t1, g1), (t2, g2))):
            sigma = {L.unwrap(a): n for a, n in zip(t.args, shared)}
            for lit in g:
                for v in L.term_vars(lit.poly):
                    if v not in sigma:
                        sigma[v] = L.App(f"_g{k}_{side}_{v.name}", (), v.sort)
            # the clause reads  !guard | head, so the guard is the conjunction of the negated literals
            for lit in g:
                neg = [L.make_rel(x.op, L.as_poly(L.substitute_term(x.poly, sigma))) for x in lit.negate()]
                clauses.append(frozenset(x for x in neg if isinstance(x, L.Rel)))
        if any(a.args for cl in clauses for x in cl for a in x.poly.atoms() if isinstance(a, L.App)):
            continue
        try:
            r = check_ground_sat(clauses)
        except Exception:  # pragma: no cover - obligation left open
            issues.append(f"guard disjointness for {t1.fn} undecided")
            continue
        if r.status != "unsat":
            issues.append(f"guards of two {t1.fn} update clauses overlap")
    return issues


# --------------------------------------------------------------------------
# instantiation


def est(clauses: Iterable, goal: Iterable, symbols) -> set:
    """Ground extension terms of ``symbols`` in the clauses and the goal."""
    out = set()
    for c in itertools.chain(clauses, goal):
        for t in ext_terms_of_clause(c, symbols):
            if not L.term_vars(t):
                out.add(t)
    return out


def _match_arg(pat: L.Term, g: L.Term, sigma: dict):
    """Extend ``sigma`` so that ``pat`` equals ``g``; returns False, True or None (undecided)."""
    if isinstance(pat, L.Poly):
        p = L.as_poly(L.substitute_term(pat, sigma))
        free = L.term_vars(p)
        gp = L.as_poly(g)
        if not free:
            return p == gp
        # only a single variable appearing linearly and directly can be solved
        direct = [v for v in free if v in p.atoms()]
        if len(free) != 1 or len(direct) != 1:
            return None
        v = direct[0]
        if p.degree_in(v) != 1:
            return None
        coef, rest = p.split(v)
        if not coef.is_const():
            return None
        val = (gp - rest).scale(1 / coef.const_value())
        if v.sort.kind == "int" and not L._compatible(L.INT, val):
            return False
        if v.sort.kind != "int" and not v.sort.numeric:
            val = L.unwrap(val)
        sigma[v] = val
        return True
    if isinstance(pat, L.Var):
        if pat in sigma:
            return sigma[pat] == g
        sigma[pat] = g
        return True
    if isinstance(pat, L.App):
        if not isinstance(g, L.App) or g.fn != pat.fn or len(g.args) != len(pat.args):
            return False
        for a, b in zip(pat.args, g.args):
            r = _match_arg(a, b, sigma)
            if r is not True:
                return r
        return True
    return False


def _depth(t: L.Term) -> int:
    if isinstance(t, L.App):
        return 1 + max((_depth(a) for a in t.args), default=0)
    if isinstance(t, L.Poly):
        return max((_depth(a) for m, _ in t.terms for a, _e in m), default=0)
    return 0


def _bound_only(lit: L.Rel, v: L.Var):
    """``(a, b)`` when ``lit`` is ``a*v + b op 0`` with numeric ``a``, ``b``."""
    p = L.as_poly(lit.poly)
    if p.atoms() - {v} or p.degree_in(v) != 1:
        return None
    a, b = p.split(v)
    if not (a.is_const() and b.is_const()):
        return None
    return a.const_value(), b.const_value()


def _test_points(thresholds, integral: bool):
    ts = sorted(set(thresholds))
    pts = [ts[0] - 1, ts[-1] + 1]
    for lo, hi in zip(ts, ts[1:]):
        pts.append((lo + hi) / 2)
    pts += ts
    if integral:
        pts = [q for t in pts for q in (math.floor(t), math.ceil(t))]
    return pts


def drop_bound_vars(c):
    """Remove variables that occur only in numeric bounds ``a*v + b op 0``.

    The literals with such a ``v`` form a finite union of intervals, so
    ``forall v`` of their disjunction is decided exactly by sampling one
    point per cell (an integer one for ``int`` variables).  Returns the
    clause without those literals, or None when they are valid.
    """
    for v in sorted(L.clause_vars(c), key=lambda v: v.name):
        mine = [lit for lit in c if v in L.term_vars(lit.poly)]
        coeffs = [_bound_only(lit, v) for lit in mine]
        if any(x is None for x in coeffs):
            continue
        pts = _test_points([-b / a for a, b in coeffs], v.sort.kind == "int")
        valid = all(any(L._cmp(lit.op, a * q + b) for lit, (a, b) in zip(mine, coeffs)) for q in pts)
        if valid:
            return None
        c = frozenset(lit for lit in c if lit not in mine)
    return c


def instantiate(clauses: Iterable, T: Iterable, symbols) -> list:
    """``K[T]``: ground instances whose extension terms all lie in ``T``."""
    T = set(T)
    by_fn: dict = {}
    for t in T:
        by_fn.setdefault(t.fn, []).append(t)
    for v in by_fn.values():
        v.sort(key=lambda t: t.key())
    out = []
    seen = set()
    for c in clauses:
        cvars = L.clause_vars(c)
        if cvars:
            c = drop_bound_vars(c)
            if c is None:
                continue
            cvars = L.clause_vars(c)
        if not cvars:
            if c not in seen:
                seen.add(c)
                out.append(c)
            continue
        terms = sorted({t for t in ext_terms_of_clause(c, symbols) if L.term_vars(t)}, key=lambda t: (_depth(t), t.key()))
        covered = set()
        for t in terms:
            covered |= L.term_vars(t)
        if covered != cvars:
            missing = sorted(v.name for v in cvars - covered)
            raise NonGroundInstanceError(
                f"non-ground instance: variable(s) {', '.join(missing)} not below an extension symbol in {L.format_clause(c)}")
        for sigma in _matches(terms, by_fn, {}, T):
            inst = L.clause_substitute(c, sigma)
            if inst is None or inst in seen:
                continue
            # every extension term of the instance must be in T
            ok = all(e in T for e in ext_terms_of_clause(inst, symbols))
            if ok:
                seen.add(inst)
                out.append(inst)
    return out


def _matches(terms, by_fn, sigma, T, postponed=0):
    if not terms:
        yield dict(sigma)
        return
    t, rest = terms[0], terms[1:]
    inst = L.substitute_term(t, sigma)
    if not L.term_vars(inst):
        if inst in T:
            yield from _matches(rest, by_fn, sigma, T)
        return
    undecided_any = False
    for cand in by_fn.get(t.fn, ()):
        if len(cand.args) != len(t.args):
            continue
        s2 = dict(sigma)
        pending = list(zip(inst.args, cand.args))
        ok = True
        progress = True
        while pending and ok and progress:
            progress = False
            nxt = []
            for a, b in pending:
                r = _match_arg(a, b, s2)
                if r is False:
                    ok = False
                    break
                if r is None:
                    nxt.append((a, b))
                else:
                    progress = True
            pending = [(L.substitute_term(a, s2) if isinstance(a, L.Poly) else a, b) for a, b in nxt]
        if not ok:
            continue
        if pending:
            undecided_any = True
            continue
        yield from _matches(rest, by_fn, s2, T)
    if undecided_any and postponed < len(terms):
        # retry this term after the others have bound more variables
        yield from _matches(rest + [t], by_fn, sigma, T, postponed + 1)


# --------------------------------------------------------------------------
# purification


@dataclass
class LevelReduction:
    level: int
    symbols: frozenset
    terms: list
    instances: list
    defs: list  # (term, constant)
    congruence: list
    certificate: str = ""


@dataclass
class Reduction:
    clauses: list
    origins: list
    levels: list = field(default_factory=list)

    @property
    def defs(self) -> list:
        out = []
        for lv in self.levels:
            out.extend(lv.defs)
        return out

    def subst_map(self) -> dict:
        """Constant -> defining term, fully expanded."""
        raw = {c: t for t, c in self.defs}
        out = {}

        def expand(c, depth=0):
            if c in out:
                return out[c]
            t = raw[c]
            t2 = L.map_term(t, lambda s: expand(s, depth + 1) if s in raw and depth < 50 else None)
            out[c] = t2
            return t2

        for c in raw:
            expand(c)
        return out


def purify(items: list, symbols, level: int, names: L.NameSupply, name_arguments: bool = False,
           existing: dict | None = None):
    """Replace terms rooted at ``symbols`` by fresh constants.

    ``items`` is a list of ``(clause, origin)``; returns ``(items0, defs)``
    where ``defs`` maps each replaced term (with purified arguments) to its
    constant.  With ``name_arguments`` non-constant arguments are named too
    and their defining equations are added as clauses.
    """
    defs: dict = dict(existing or {})
    argdefs: dict = {}
    extra = []

    def name_of(t: L.App) -> L.App:
        c = defs.get(t)
        if c is None:
            c = L.App(names.fresh(f"_p{level}"), (), t.sort)
            defs[t] = c
        return c

    def fn(s):
        if isinstance(s, L.App) and s.args and s.fn in symbols:
            node = s
            if name_arguments:
                new_args = []
                for a in s.args:
                    u = L.unwrap(a)
                    if isinstance(u, L.App) and not u.args:
                        new_args.append(a)
                        continue
                    k = argdefs.get(a)
                    if k is None:
                        k = L.App(names.fresh(f"_p{level}"), (), L.term_sort(a))
                        argdefs[a] = k
                        eq = L.rel("=", k, a)
                        extra.append((frozenset([eq]), f"argdef@{level}"))
                    new_args.append(k)
                node = L.App(s.fn, new_args, s.sort)
            return name_of(node)
        return None

    out = []
    for c, origin in items:
        new = set()
        valid = False
        for lit in c:
            r = L.make_rel(lit.op, L.as_poly(L.map_term(lit.poly, fn)))
            if r == L.TRUE:
                valid = True
                break
            if r == L.FALSE:
                continue
            new.add(r)
        if valid:
            continue
        c2 = frozenset(new)
        if L.clause_is_tautology(c2):
            continue
        out.append((c2, origin))
    return out + extra, [(t, c) for t, c in defs.items() if existing is None or t not in existing]


def congruence_instances(defs: Sequence, units: Iterable = ()) -> list:
    """Clauses ``args1 = args2 -> c1 = c2`` for definitions sharing a symbol.

    Instances whose premise is refuted by a constant difference or by a unit
    strict inequality in ``units`` are omitted.
    """
    unit_set = set()
    for u in units:
        if len(u) == 1:
            unit_set |= set(u)
    by_fn: dict = {}
    for t, c in defs:
        by_fn.setdefault(t.fn, []).append((t, c))
    out = []
    for fn in sorted(by_fn):
        entries = sorted(by_fn[fn], key=lambda tc: tc[0].key())
        for (t1, c1), (t2, c2) in itertools.combinations(entries, 2):
            lits = set()
            refuted = False
            for a, b in zip(t1.args, t2.args):
                diff = L.as_poly(a) - L.as_poly(b)
                if diff.is_const():
                    if diff.const_value() != 0:
                        refuted = True
                        break
                    continue
                lt = L.make_rel("<", diff)
                gt = L.make_rel("<", -diff)
                if lt in unit_set or gt in unit_set:
                    refuted = True
                    break
                lits.add(lt)
                lits.add(gt)
            if refuted:
                continue
            concl = L.rel("=", c1, c2)
            if concl == L.TRUE:
                continue
            if isinstance(concl, L.Rel):
                lits.add(concl)
            out.append(frozenset(lits))
    return out


def hierarchical_reduce(chain: Sequence[ExtensionLevel], goal, *, extra_terms: Iterable = (),
                        names: L.NameSupply | None = None, name_arguments: bool = True,
                        origins: Sequence[str] | None = None) -> Reduction:
    """Reduce ``chain`` (ordered by level) and the ground goal to base clauses."""
    names = names or L.NameSupply()
    items = [(frozenset(c), (origins[i] if origins else "goal")) for i, c in enumerate(goal)]
    for c, _ in items:
        for lit in c:
            names.reserve(a.fn for a in lit.poly.atoms() if isinstance(a, L.App))
    extra_terms = list(extra_terms)
    levels = []
    for lv in sorted(chain, key=lambda l: -l.level):
        sym = lv.symbols
        G = [c for c, _ in items]
        T = est(lv.clauses, G, sym) | {t for t in extra_terms if isinstance(t, L.App) and t.fn in sym}
        if lv.closure is not None:
            T = set(lv.closure(T))
        insts = instantiate(lv.clauses, T, sym)
        work = items + [(c, f"inst@{lv.level}") for c in insts]
        work, defs = purify(work, sym, lv.level, names, name_arguments)
        units = [c for c, _ in work if len(c) == 1]
        con = congruence_instances(defs, units)
        work = work + [(c, f"con@{lv.level}") for c in con]
        levels.append(LevelReduction(lv.level, sym, sorted(T, key=lambda t: t.key()), insts, defs, con,
                                     lv.certificate.name))
        items = work
        # terms that still mention these symbols in extra_terms are purified as well
        extra_terms = [L.replace_in_term(t, dict(defs)) if isinstance(t, L.App) else t for t in extra_terms]
    return Reduction([c for c, _ in items], [o for _, o in items], levels)


def replay_defs(reduction: Reduction, clauses: Iterable) -> list:
    """Substitute definitions back into purified clauses."""
    m = reduction.subst_map()
    out = []
    for c in clauses:
        r = L.clause_replace(c, m)
        if r is not None:
            out.append(r)
    return out
