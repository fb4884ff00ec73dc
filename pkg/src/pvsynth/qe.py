"""Quantifier elimination for linear arithmetic by Fourier-Motzkin.

Variables to eliminate are atoms (bound variables or constants).  A variable
may carry a coefficient that is a polynomial in the remaining symbols; such
coefficients are case-split on their sign (positive, zero, negative) so the
result stays exact.  Elimination is over the reals; integer-sorted atoms are
tightened before and after each step, which is sound but may under-eliminate
integer structure (the result is then a weaker existential, i.e. a stronger
derived constraint).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import logic as L
from .fm import Lin, tighten
from .ground import GroundSolver, SolverConfig


class NonlinearEliminationError(ValueError):
    pass


@dataclass
class QETrace:
    steps: list = field(default_factory=list)

    def log(self, msg: str) -> None:
        self.steps.append(msg)


def _all_int(p: L.Poly) -> bool:
    atoms = p.atoms()
    return bool(atoms) and all(a.sort.kind == "int" for a in atoms)


def tighten_rel(r: L.Rel) -> L.Formula:
    """Integer tightening of an atom over integer symbols only."""
    if not _all_int(r.poly):
        return r
    lin = Lin(tuple((m, c) for m, c in r.poly.terms if m), r.poly.const_value(), r.op)
    t = tighten(lin)
    p = L.Poly(list(t.coeffs) + [((), t.const)])
    return L.make_rel(t.op, p)


def _norm_atoms(atoms: Iterable[L.Formula]):
    """Normalise, tighten and dedupe; None if some atom is false."""
    out = []
    seen = set()
    for a in atoms:
        if a == L.TRUE:
            continue
        if a == L.FALSE:
            return None
        if isinstance(a, L.Rel):
            a = tighten_rel(a)
            if a == L.FALSE:
                return None
            if a == L.TRUE:
                continue
        if a not in seen:
            seen.add(a)
            out.append(a)
    return out


def _sign_of(coef: L.Poly, cube) -> int | None:
    """Sign of ``coef`` if a cube atom fixes it."""
    if coef.is_const():
        v = coef.const_value()
        return (v > 0) - (v < 0)
    gt = L.make_rel("<", -coef)
    lt = L.make_rel("<", coef)
    eq = L.make_rel("=", coef)
    s = set(cube)
    if gt in s:
        return 1
    if lt in s:
        return -1
    if eq in s:
        return 0
    return None


def _occurrences(v, cube) -> int:
    return sum(1 for a in cube if v in a.poly.atoms())


def eliminate_exists(vars_: Sequence, cube: Iterable[L.Rel], trace: QETrace | None = None,
                     prune: bool = True) -> list:
    """Eliminate ``vars_`` from ``exists vars_. /\\ cube``.

    Returns an equivalent disjunction as a list of cubes (lists of Rel); the
    list is usually a single cube and is longer only when parametric
    coefficients had to be case-split.
    """
    todo = [v for v in vars_]
    start = _norm_atoms(cube)
    if start is None:
        return []
    result = []
    solver = GroundSolver(SolverConfig()) if prune else None
    _elim_rec(todo, start, result, trace, solver)
    # dedupe cubes
    seen = set()
    out = []
    for c in result:
        k = frozenset(c)
        if k not in seen:
            seen.add(k)
            out.append(sorted(k))
    return out


def _pick_var(todo, cube):
    """Fewest occurrences first, then term order; skip blocked variables."""
    cands = []
    for v in todo:
        occ = 0
        ok = True
        for a in cube:
            if v not in a.poly.atoms():
                continue
            occ += 1
            if a.poly.degree_in(v) > 1:
                ok = False
                break
            coef, _ = a.poly.split(v)
            if any(u in coef.atoms() for u in todo if u != v):
                ok = False
                break
        if ok:
            cands.append((occ, v.key(), v))
    if not cands:
        return None
    cands.sort(key=lambda t: (t[0], t[1]))
    return cands[0][2]


def _elim_rec(todo, cube, result, trace, solver):
    todo = [v for v in todo if any(v in a.poly.atoms() for a in cube)]
    if not todo:
        result.append(cube)
        return
    v = _pick_var(todo, cube)
    if v is None:
        raise NonlinearEliminationError(
            "nonlinear elimination unsupported for " + ", ".join(L.format_term(x) for x in todo))
    rest_todo = [u for u in todo if u != v]
    with_v, without = [], []
    for a in cube:
        if v in a.poly.atoms():
            coef, rest = a.poly.split(v)
            with_v.append((a, coef, rest))
        else:
            without.append(a)
    # case-split on an undetermined parametric coefficient
    for a, coef, rest in with_v:
        if _sign_of(coef, cube) is None:
            for sign_atom in (L.make_rel("<", -coef), L.make_rel("=", coef), L.make_rel("<", coef)):
                sub = _norm_atoms(list(cube) + [sign_atom])
                if sub is None:
                    continue
                if solver is not None and not _feasible(solver, sub):
                    continue
                if trace:
                    trace.log(f"case {L.format_formula(sign_atom)} for coefficient of {L.format_term(v)}")
                _elim_rec(todo, sub, result, trace, solver)
            return
    signs = [(a, coef, rest, _sign_of(coef, cube)) for a, coef, rest in with_v]
    # zero coefficients: the v-part vanishes
    live = []
    for a, coef, rest, s in signs:
        if s == 0:
            r = L.make_rel(a.op, rest)
            without.append(r)
        else:
            live.append((a, coef, rest, s))
    if trace:
        trace.log(f"eliminate {L.format_term(v)} ({len(live)} atoms)")
    eqs = [t for t in live if t[0].op == "="]
    new_atoms = list(without)
    if eqs:
        # substitute using an equality; prefer numeric coefficients
        eqs.sort(key=lambda t: (not t[1].is_const(), t[0]))
        ea, ecoef, erest, es = eqs[0]
        for a, coef, rest, s in live:
            if a is ea:
                continue
            # a: coef*v + rest op 0 ; ea: ecoef*v + erest = 0
            # ecoef*a - coef*ea : ecoef*rest - coef*erest op' 0 (flip when ecoef < 0)
            combo = ecoef * rest - coef * erest
            op = a.op
            if es < 0:
                combo = -combo
            new_atoms.append(L.make_rel(op, combo))
    else:
        ups = [(a, coef, rest, s) for a, coef, rest, s in live if s > 0]
        los = [(a, coef, rest, s) for a, coef, rest, s in live if s < 0]
        for au, cu, ru, _ in ups:
            for al, cl, rl, _ in los:
                # v <= -ru/cu  and  v >= -rl/cl ; (-cl)*ru + cu*rl op 0
                combo = (-cl) * ru + cu * rl
                op = "<" if (au.op == "<" or al.op == "<") else "<="
                new_atoms.append(L.make_rel(op, combo))
    nxt = _norm_atoms(new_atoms)
    if nxt is None:
        return
    if solver is not None and not _feasible(solver, nxt):
        return
    _elim_rec(rest_todo, nxt, result, trace, solver)


def _feasible(solver: GroundSolver, cube) -> bool:
    try:
        return solver.cube_feasible([a for a in cube if isinstance(a, L.Rel)])
    except Exception:  # pragma: no cover - feasibility is only an optimisation
        return True


def eliminate(phi: L.Formula, *, cube_limit: int = 4096, trace: QETrace | None = None) -> L.Formula:
    """Quantifier-free equivalent of ``phi`` (innermost blocks first)."""

    def go(f: L.Formula) -> L.Formula:
        if isinstance(f, (L.Rel, L.BoolConst)):
            return f
        if isinstance(f, L.Not):
            return L.nnf(L.Not(go(f.arg)))
        if isinstance(f, L.And):
            return L.conj(*[go(a) for a in f.args])
        if isinstance(f, L.Or):
            return L.disj(*[go(a) for a in f.args])
        if isinstance(f, (L.Implies, L.Iff)):
            return go(L.nnf(f))
        if isinstance(f, L.Exists):
            body = go(f.body)
            return _exists_qf(f.vars, body, cube_limit, trace)
        if isinstance(f, L.Forall):
            body = go(f.body)
            neg = L.nnf(L.Not(body))
            return L.nnf(L.Not(_exists_qf(f.vars, neg, cube_limit, trace)))
        if isinstance(f, L.PredAtom):
            raise TypeError("predicate atoms are not supported by elimination")
        raise TypeError(f)

    return go(phi)


def _exists_qf(vars_, body, cube_limit, trace) -> L.Formula:
    cubes = L.to_dnf(body, cube_limit)
    out = []
    for c in cubes:
        for r in eliminate_exists(list(vars_), c, trace):
            out.append(L.conj(*r))
    return L.disj(*out)


def simplify(phi: L.Formula, assumptions: Sequence[L.Formula] = (), config: SolverConfig | None = None) -> L.Formula:
    """Replace atoms decided by ``assumptions`` and clean up connectives.

    ``assumptions`` are ground quantifier-free formulas; atoms of ``phi`` may
    contain free variables, which are treated as uninterpreted constants.
    """
    from .ground import GroundSolver, formula_clauses

    solver = GroundSolver(config)
    base = []
    for a in assumptions:
        base.extend(formula_clauses(a))
    memo: dict = {}

    def decide(a: L.Formula) -> L.Formula:
        if not isinstance(a, L.Rel):
            return a
        if a in memo:
            return memo[a]
        res = a
        if base:
            neg = [frozenset(a.negate())]
            if solver.solve(base + neg).status == "unsat":
                res = L.TRUE
            elif solver.solve(base + [frozenset([a])]).status == "unsat":
                res = L.FALSE
        memo[a] = res
        return res

    out = L.map_atoms(L.nnf(phi), decide)
    return _clean(out)


def _clean(phi: L.Formula) -> L.Formula:
    if isinstance(phi, L.And):
        parts = [_clean(a) for a in phi.args]
        r = L.conj(*parts)
        if isinstance(r, L.And):
            args = list(dict.fromkeys(r.args))
            return L.conj(*args) if len(args) != len(r.args) else r
        return r
    if isinstance(phi, L.Or):
        parts = [_clean(a) for a in phi.args]
        r = L.disj(*parts)
        if isinstance(r, L.Or):
            args = list(dict.fromkeys(r.args))
            return L.disj(*args) if len(args) != len(r.args) else r
        return r
    if isinstance(phi, (L.Forall, L.Exists)):
        body = _clean(phi.body)
        if isinstance(body, L.BoolConst):
            return body
        return (L.forall if isinstance(phi, L.Forall) else L.exists)(phi.vars, body)
    return phi


def minimise_cube(cube: Sequence[L.Rel], context: Sequence = (), config: SolverConfig | None = None) -> list:
    """Drop atoms implied by the rest of the cube (and ``context`` clauses)."""
    solver = GroundSolver(config)
    atoms = list(cube)
    i = 0
    while i < len(atoms):
        a = atoms[i]
        others = [frozenset([b]) for j, b in enumerate(atoms) if j != i] + list(context)
        if solver.solve(others + [frozenset(a.negate())]).status == "unsat":
            atoms.pop(i)
        else:
            i += 1
    return atoms
