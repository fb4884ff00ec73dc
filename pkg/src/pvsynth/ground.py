"""Satisfiability of ground clause sets over linear real/integer arithmetic.

The search splits on literals (weighted by occurrence in short clauses)
with unit and theory propagation; feasibility of each partial cube is
checked exactly by Fourier-Motzkin, and infeasible cores are learned as
clauses.
Nonlinear monomials are treated as opaque variables, so UNSAT answers are
always sound; a SAT answer whose model cannot be made consistent with the
products is downgraded to UNKNOWN.  Integer constants are handled by
tightening and a bounded branch-and-bound on non-integral model values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from . import logic as L
from .fm import FMLimit, FMSolver, Lin

SAT, UNSAT, UNKNOWN = "sat", "unsat", "unknown"


@dataclass
class SolverConfig:
    cube_limit: int = 4096
    branch_depth: int = 8
    fm_limit: int = 20000


@dataclass
class SatResult:
    status: str
    model: dict | None = None  # atom -> Fraction
    reason: str = ""
    cube: frozenset | None = None
    leaves: int = 0

    def __bool__(self):  # pragma: no cover - guard against misuse
        raise TypeError("use .status")


class _Abort(Exception):
    pass


def _mono_order(m):
    return L._mono_key(m)


def _mono_is_int(m) -> bool:
    return all(a.sort.kind == "int" for a, _ in m)


def rel_to_lin(r: L.Rel) -> Lin:
    d = {}
    k = Fraction(0)
    for m, c in r.poly.terms:
        if m:
            d[m] = c
        else:
            k = c
    return Lin(tuple(sorted(d.items(), key=lambda mc: _mono_order(mc[0]))), k, r.op)


def _ground_check(clauses) -> None:
    for c in clauses:
        for lit in c:
            for a in lit.poly.atoms():
                if isinstance(a, L.Var):
                    continue
                if a.args:
                    raise ValueError(f"extension term {L.format_term(a)} in ground problem")


class GroundSolver:
    def __init__(self, config: SolverConfig | None = None):
        self.config = config or SolverConfig()
        self._fm = FMSolver(_mono_is_int, _mono_order, self.config.fm_limit)
        self._cache: dict = {}
        self._order: dict = {}

    def _sorted(self, c: frozenset) -> list:
        s = self._order.get(c)
        if s is None:
            s = self._order[c] = sorted(c)
        return s

    # -- feasibility of a cube ------------------------------------------------
    def cube_model(self, cube: Iterable[L.Rel]):
        key = frozenset(cube)
        if key in self._cache:
            return self._cache[key]
        model: dict | None = {}
        for comp in _components(key):
            sub = self._cache.get(comp)
            if sub is None and comp not in self._cache:
                sub = self._fm.feasible([rel_to_lin(r) for r in comp])
                self._cache[comp] = sub
            if sub is None:
                model = None
                break
            model.update(sub)
        self._cache[key] = model
        return model

    def cube_feasible(self, cube) -> bool:
        return self.cube_model(cube) is not None

    def _comp_feasible(self, comp: frozenset) -> bool:
        if comp not in self._cache:
            self._cache[comp] = self._fm.feasible([rel_to_lin(r) for r in comp])
        return self._cache[comp] is not None

    def extension_feasible(self, comps, lit) -> bool:
        """Is a feasible cube, split into ``comps``, still feasible with ``lit``?

        Only the components sharing a monomial with ``lit`` can conflict.
        """
        monos = {m for m, _ in lit.poly.terms if m}
        touched = [c for c, ms in comps if ms & monos]
        return self._comp_feasible(frozenset().union(*touched, {lit}))

    # -- search ---------------------------------------------------------------
    def solve(self, clauses: Iterable[frozenset]) -> SatResult:
        clauses = [frozenset(c) for c in clauses]
        for c in clauses:
            for lit in c:
                if not isinstance(lit, L.Rel):
                    raise TypeError(f"clause literal is not a relation: {lit!r}")
        if any(len(c) == 0 for c in clauses):
            return SatResult(UNSAT, reason="empty clause")
        self._leaves = 0
        self._unknown = ""
        self._lemmas: list = []
        try:
            res = self._search(clauses, frozenset(), 0)
        except FMLimit as e:
            return SatResult(UNKNOWN, reason=str(e), leaves=self._leaves)
        except _Abort as e:
            return SatResult(UNKNOWN, reason=str(e), leaves=self._leaves)
        if res is None:
            if self._unknown:
                return SatResult(UNKNOWN, reason=self._unknown, leaves=self._leaves)
            return SatResult(UNSAT, leaves=self._leaves)
        model, cube = res
        return SatResult(SAT, model=model, cube=cube, leaves=self._leaves)

    def _simplify(self, clauses, cube):
        out = []
        for c in clauses:
            if c & cube:
                continue
            keep = []
            for lit in c:
                comp = lit.negate()
                if len(comp) == 1 and comp[0] in cube:
                    continue
                if lit.op == "=" and (comp[0] in cube or comp[1] in cube):
                    continue
                keep.append(lit)
            if not keep:
                return None
            out.append(frozenset(keep) if len(keep) != len(c) else c)
        return out

    def core(self, cube, extra=None) -> frozenset:
        """Deletion-minimal infeasible subset of ``cube`` (``extra`` always kept)."""
        atoms = sorted(cube)
        keep = [] if extra is None else [extra]
        i = 0
        while i < len(atoms):
            trial = atoms[:i] + atoms[i + 1:]
            if not self.cube_feasible(frozenset(trial + keep)):
                atoms = trial
            else:
                i += 1
        return frozenset(atoms)

    def _learn(self, atoms) -> None:
        lits = set()
        for a in atoms:
            lits.update(a.negate())
        if lits:
            self._lemmas.append(frozenset(lits))

    def _propagate(self, clauses, cube):
        """Unit and theory propagation; returns ``(clauses, cube)`` or None on conflict."""
        while True:
            cl = self._simplify(clauses + self._lemmas, cube)
            if cl is None:
                return None
            reduced = []
            units = []
            model = self.cube_model(cube)
            if model is None:
                self._learn(self.core(cube))
                return None
            comps = [(g, {m for r in g for m, _ in r.poly.terms if m}) for g in _components(cube)]
            for c in cl:
                keep = [lit for lit in self._sorted(c) if _sat_by(lit, model) or self.extension_feasible(comps, lit)]
                if not keep:
                    why = set()
                    for lit in c:
                        why |= self.core(cube, lit)
                    self._learn(why)
                    return None
                if len(keep) == 1:
                    units.append(keep[0])
                reduced.append(frozenset(keep))
            if not units:
                return reduced, cube
            new = cube | frozenset(units)
            if not self.cube_feasible(new):
                self._learn(self.core(new))
                return None
            clauses, cube = reduced, new

    def _search(self, clauses, cube, bb_depth):
        if not self.cube_feasible(cube):
            return None
        r = self._propagate(list(clauses), cube)
        if r is None:
            return None
        clauses, cube = r
        if not clauses:
            return self._leaf(cube, bb_depth)
        lit = _pick_literal(clauses)
        # branch: the literal holds, or it fails (its complement holds)
        r = self._search(clauses, cube | {lit}, bb_depth)
        if r is not None:
            return r
        comp = lit.negate()
        if len(comp) == 1:
            return self._search(clauses, cube | {comp[0]}, bb_depth)
        rest = [c - {lit} for c in clauses]
        if any(not c for c in rest):
            return None
        return self._search(rest + [frozenset(comp)], cube, bb_depth)

    def _leaf(self, cube, bb_depth):
        self._leaves += 1
        if self._leaves > self.config.cube_limit:
            raise _Abort("cube limit exceeded")
        model = self.cube_model(cube)
        if model is None:
            return None
        # integrality on integer-sorted linear atoms
        for m, v in sorted(model.items(), key=lambda mv: _mono_order(mv[0])):
            if len(m) == 1 and m[0][1] == 1 and m[0][0].sort.kind == "int" and v.denominator != 1:
                if bb_depth >= self.config.branch_depth:
                    self._unknown = "integer branch depth exceeded"
                    return None
                atom = L.Poly(((m, Fraction(1)),))
                lo = L.make_rel("<=", atom - int(math.floor(v)))
                hi = L.make_rel("<=", int(math.ceil(v)) - atom)
                for extra in (lo, hi):
                    r = self._search([], cube | {extra}, bb_depth + 1)
                    if r is not None:
                        return r
                return None
        env = build_atom_model(model)
        if env is None:
            self._unknown = "model inconsistent with nonlinear products"
            return None
        for lit in cube:
            if not lit.holds(env):
                self._unknown = "model check failed"
                return None
        return env, cube


def _components(cube: frozenset) -> list:
    """Split a cube into groups of atoms connected by shared monomials."""
    if len(cube) <= 1:
        return [cube] if cube else []
    parent: dict = {}

    def find(x):
        while parent[x] is not x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    first: dict = {}
    for r in cube:
        parent[r] = r
        for m, _ in r.poly.terms:
            if not m:
                continue
            if m in first:
                a, b = find(first[m]), find(r)
                if a is not b:
                    parent[a] = b
            else:
                first[m] = r
    groups: dict = {}
    for r in cube:
        groups.setdefault(find(r), []).append(r)
    if len(groups) == 1:
        return [cube]
    return [frozenset(g) for _, g in sorted(groups.items(), key=lambda kv: min(kv[1]))]


def _pick_literal(clauses) -> L.Rel:
    """Literal with the largest weighted occurrence (short clauses weigh more)."""
    score: dict = {}
    for c in clauses:
        w = 2.0 ** -len(c)
        for lit in c:
            score[lit] = score.get(lit, 0.0) + w
            # the complement shares the decision
            comp = lit.negate()
            if len(comp) == 1:
                score[comp[0]] = score.get(comp[0], 0.0) + w
    return max(sorted(score), key=lambda l: (score[l], l.op == "="))


def _sat_by(lit: L.Rel, mono_model: dict) -> bool:
    """Does ``lit`` hold in a monomial valuation (absent monomials read as 0)?"""
    v = Fraction(0)
    for m, c in lit.poly.terms:
        v += c * (mono_model.get(m, 0) if m else 1)
    return L._cmp(lit.op, v)


def build_atom_model(mono_model: dict) -> dict | None:
    """Turn a monomial valuation into an atom valuation (or None)."""
    env: dict = {}
    for m, v in mono_model.items():
        if len(m) == 1 and m[0][1] == 1:
            env[m[0][0]] = v
    nonlin = sorted((m for m in mono_model if not (len(m) == 1 and m[0][1] == 1)), key=_mono_order)
    for m in nonlin:
        v = mono_model[m]
        unknown = [(a, e) for a, e in m if a not in env]
        if unknown:
            for a, e in unknown[:-1]:
                env[a] = Fraction(1)
            a, e = unknown[-1]
            known = Fraction(1)
            for b, f in m:
                if b is not a and b in env:
                    known *= env[b] ** f
            if known == 0:
                if v != 0:
                    return None
                env[a] = Fraction(0)
                continue
            target = v / known
            if e == 1:
                env[a] = target
            elif e % 2 == 1 or target >= 0:
                root = _exact_root(target, e)
                if root is None:
                    return None
                env[a] = root
            else:
                return None
            if a.sort.kind == "int" and env[a].denominator != 1:
                return None
        prod = Fraction(1)
        for a, e in m:
            prod *= env[a] ** e
        if prod != v:
            return None
    return env


def _exact_root(q: Fraction, e: int):
    neg = q < 0
    q = abs(q)
    n = round(q.numerator ** (1.0 / e))
    d = round(q.denominator ** (1.0 / e))
    for nn in (n - 1, n, n + 1):
        for dd in (d - 1, d, d + 1):
            if nn >= 0 and dd > 0 and Fraction(nn, dd) ** e == q:
                r = Fraction(nn, dd)
                return -r if neg else r
    return None


# --------------------------------------------------------------------------
# convenience API


def formula_clauses(phi: L.Formula) -> list:
    """Clauses of a ground quantifier-free formula."""
    return L.cnf_clauses(L.nnf(L.encode_predicates(phi)))


def check_ground_sat(clauses, config: SolverConfig | None = None) -> SatResult:
    """Decide satisfiability of extension-free ground clauses."""
    if isinstance(clauses, L.Formula):
        clauses = formula_clauses(clauses)
    clauses = list(clauses)
    _ground_check(clauses)
    return GroundSolver(config).solve(clauses)


def entails(gamma, phi: L.Formula, config: SolverConfig | None = None) -> str:
    """``sat``/``unsat``/``unknown`` status of ``gamma & !phi`` mapped to
    ``yes``/``no``/``unknown`` for the entailment ``gamma |= phi``."""
    if isinstance(gamma, L.Formula):
        gcl = formula_clauses(gamma)
    else:
        gcl = list(gamma)
    neg = formula_clauses(L.Not(phi))
    r = check_ground_sat(gcl + neg, config)
    return {UNSAT: "yes", SAT: "no"}.get(r.status, "unknown")


def cube_feasible(cube, config: SolverConfig | None = None) -> bool:
    return GroundSolver(config).cube_feasible(cube)
