"""Symbol elimination: derive parameter constraints that make a goal unsatisfiable.

The goal is reduced hierarchically without naming arguments, so every
extension term is renamed by a constant whose definition is kept.  The
constants are then classified:

* ``c_f``  parameters, and constants renaming terms rooted at a parameter;
* ``c_p``  constants occurring as arguments of such terms;
* ``rest`` everything else.

The reduced clauses are brought into disjunctive form, the ``rest``
constants are eliminated cube by cube, parameter terms are substituted
back, argument constants become universally quantified variables, and the
negation of the result is the derived constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import logic as L
from .engine import LevelPlan, Options, UnknownError, build_goal, plan_levels, refute
from .ground import GroundSolver, SolverConfig, formula_clauses
from .locality import hierarchical_reduce, instantiate
from .qe import NonlinearEliminationError, QETrace, eliminate_exists, minimise_cube


@dataclass
class ConstantClassification:
    c_f: set = field(default_factory=set)
    c_p: set = field(default_factory=set)
    rest: set = field(default_factory=set)
    dual: set = field(default_factory=set)  # both renamer and argument; kept in c_f


@dataclass
class SynthesisResult:
    status: str  # ok | unknown
    clauses: list = field(default_factory=list)  # universally closed constraint clauses
    weakest: bool = False
    reason: str = ""
    trace: dict = field(default_factory=dict)
    parts: list = field(default_factory=list)  # per-VC results

    @property
    def constraint(self) -> L.Formula:
        return constraint_formula(self.clauses)


def constraint_formula(clauses: Iterable) -> L.Formula:
    parts = [L.universal_closure(L.clause_formula(c)) for c in clauses]
    return L.conj(*parts)


@dataclass
class SynthesisConfig:
    simplify: bool = True
    drop_entailed: bool = True
    minimise: bool = True
    cube_limit: int = 4096


# --------------------------------------------------------------------------
# constant classification


def _consts_of_poly(p: L.Term) -> set:
    out = set()
    for s in L.subterms(p):
        if isinstance(s, L.App) and not s.args:
            out.add(s)
    return out


def _consts_of_clauses(clauses) -> set:
    out = set()
    for c in clauses:
        for lit in c:
            out |= _consts_of_poly(lit.poly)
    return out


def classify_constants(G1: Sequence, params: Iterable[str], defs: Sequence,
                       force_eliminate: Iterable[str] = ()) -> ConstantClassification:
    params = set(params)
    force = set(force_eliminate)
    consts = _consts_of_clauses(G1)
    for t, c in defs:
        consts.add(c)
        for a in t.args:
            consts |= _consts_of_poly(a)
    cls = ConstantClassification()
    renamers, args = set(), set()
    # a parameter term whose argument is eliminated cannot be substituted
    # back, so its renaming constant is eliminated as well
    changed = True
    while changed:
        changed = False
        for t, c in defs:
            if c.fn not in force and t.fn in params and any(a.fn in force for x in t.args
                                                            for a in _consts_of_poly(x)):
                force.add(c.fn)
                changed = True
    for t, c in defs:
        if t.fn in params and c.fn not in force:
            renamers.add(c)
            for a in t.args:
                args |= _consts_of_poly(a)
    for c in consts:
        if c.fn in force:
            cls.rest.add(c)
        elif c.fn in params or c in renamers:
            cls.c_f.add(c)
            if c in args:
                cls.dual.add(c)
        elif c in args:
            cls.c_p.add(c)
        else:
            cls.rest.add(c)
    return cls


# --------------------------------------------------------------------------
# disjunctive form with pruning


def _dnf(clauses: list, context: list, solver: GroundSolver, limit: int) -> list:
    """Cubes covering the models of ``clauses`` (each extended with ``context``)."""
    out: list = []
    clauses = sorted((frozenset(c) for c in clauses), key=lambda c: (len(c), sorted(c)))
    base = frozenset(context)

    def go(i, cube):
        while i < len(clauses) and clauses[i] & cube:
            i += 1
        if i == len(clauses):
            out.append(cube)
            if len(out) > limit:
                raise UnknownError("disjunctive normal form exceeds the cube limit")
            return
        for lit in sorted(clauses[i]):
            nc = cube | {lit}
            if solver.cube_feasible(list(nc | base)):
                go(i + 1, nc)

    if solver.cube_feasible(list(base)):
        go(0, frozenset())
    # drop subsumed cubes
    out.sort(key=len)
    kept: list = []
    for c in out:
        if not any(k <= c for k in kept):
            kept.append(c)
    return kept


# --------------------------------------------------------------------------
# the algorithm


def _back_substitute(atoms, cls: ConstantClassification, submap: dict):
    """c_f constants -> parameter terms, then c_p constants -> variables."""
    terms = {}
    for c in cls.c_f:
        if c in submap:
            terms[c] = submap[c]
    gen = {c: L.Var(c.fn, c.sort) for c in cls.c_p}

    def fn(s):
        if isinstance(s, L.App) and not s.args:
            if s in terms:
                return L.map_term(terms[s], lambda u: gen.get(u) if isinstance(u, L.App) and not u.args else None)
            if s in gen:
                return gen[s]
        return None

    out = []
    for a in atoms:
        out.append(L.make_rel(a.op, L.as_poly(L.map_term(a.poly, fn))))
    return out


def symbol_eliminate(goal_formula: L.Formula, plan: LevelPlan, params: Iterable[str], *,
                     background: Sequence[L.Formula] = (), names: L.NameSupply | None = None,
                     extra_terms: Iterable = (), force_eliminate: Iterable[str] = (),
                     options: Options | None = None, trace: QETrace | None = None,
                     minimise: bool = True) -> SynthesisResult:
    """Constraint clauses ``C`` over the parameters with ``K /\\ C /\\ goal`` unsatisfiable."""
    options = options or Options()
    params = set(params)
    names = names or L.NameSupply()
    for f in [goal_formula, *background]:
        names.reserve(a.fn for a in L.formula_apps(L.encode_predicates(f)))
    tr: dict = {}
    try:
        goal = build_goal(goal_formula, plan, names, axioms=background)
    except UnknownError as e:
        return SynthesisResult("unknown", reason=str(e), trace=tr)
    red = hierarchical_reduce(goal.chain, goal.ground, extra_terms=extra_terms, names=names,
                              name_arguments=False, origins=goal.origins)
    G1 = red.clauses
    tr["G1"] = [L.format_clause(c) for c in G1]
    cls = classify_constants(G1, params, red.defs, force_eliminate)
    tr["classification"] = {
        "c_f": sorted(c.fn for c in cls.c_f),
        "c_p": sorted(c.fn for c in cls.c_p),
        "rest": sorted(c.fn for c in cls.rest),
        "dual": sorted(c.fn for c in cls.dual),
    }
    rest = cls.rest
    premises, Q = [], []
    for c, origin in zip(G1, red.origins):
        has_rest = bool(_consts_of_clauses([c]) & rest)
        if not has_rest and origin == "goal" and len(c) == 1:
            premises.append(next(iter(c)))
        elif not has_rest and origin != "goal":
            continue  # a ground consequence of the background axioms
        else:
            Q.append(c)
    solver = GroundSolver(SolverConfig(cube_limit=options.cube_limit, branch_depth=options.branch_depth))
    try:
        cubes = _dnf(Q, premises, solver, options.cube_limit)
    except UnknownError as e:
        return SynthesisResult("unknown", reason=str(e), trace=tr)
    order = sorted(rest, key=lambda c: c.key())
    gamma1 = []
    try:
        for cube in cubes:
            atoms = list(premises) + sorted(cube)
            for r in eliminate_exists(order, atoms, trace):
                if minimise:
                    r = minimise_cube(r)
                gamma1.append(r)
    except NonlinearEliminationError as e:
        return SynthesisResult("unknown", reason=str(e), trace=tr)
    tr["Gamma1"] = [" & ".join(L.format_formula(a) for a in r) or "true" for r in gamma1]
    submap = red.subst_map()
    gamma2 = [_back_substitute(r, cls, submap) for r in gamma1]
    tr["Gamma2"] = [" & ".join(L.format_formula(a) for a in r) or "true" for r in gamma2]
    clauses = []
    for r in gamma2:
        lits = set()
        for a in r:
            if a == L.TRUE:
                continue
            lits.update(a.negate())
        c = frozenset(lits)
        if not L.clause_is_tautology(c):
            clauses.append(c)
    weakest = all(lv.certificate.comp_f for lv in goal.chain if lv.clauses) and not goal.uncertified
    return SynthesisResult("ok", _dedupe(clauses), weakest, trace=tr)


def _dedupe(clauses):
    out = []
    for c in sorted(set(clauses), key=lambda c: (len(c), sorted(c))):
        if not any(k <= c for k in out):
            out.append(c)
    return out


# --------------------------------------------------------------------------
# simplification


def _split_var_eq(c):
    """Find ``x != s`` (as the literal pair ``x < s``, ``x > s``) with x a variable."""
    lits = sorted(c)
    strict = [l for l in lits if l.op == "<"]
    polys = {l.poly: l for l in strict}
    for l in strict:
        neg = -l.poly
        other = None
        for q, m in polys.items():
            if m is l:
                continue
            if _same_up_to_scale(q, neg):
                other = m
                break
        if other is None:
            continue
        for v in sorted(L.term_vars(l.poly), key=lambda v: v.name):
            if L.Poly.atom(v).single_atom() is None:
                continue
            if l.poly.degree_in(v) != 1:
                continue
            coef, rest = l.poly.split(v)
            if not coef.is_const() or v in L.term_vars(rest):
                continue
            # v may not occur below a function symbol elsewhere in the definition
            k = coef.const_value()
            sol = rest.scale(Fraction(-1) / k)
            if v.sort.kind == "int" and not all(q.denominator == 1 for _, q in sol.terms):
                continue
            if v.sort.kind == "int" and any(a.sort.kind != "int" for a in sol.atoms()):
                continue
            return v, sol, (l, other)
    return None


def _same_up_to_scale(p: L.Poly, q: L.Poly) -> bool:
    if not p.terms or not q.terms:
        return False
    r = p.terms[0][1] / q.terms[0][1] if p.terms[0][0] == q.terms[0][0] else None
    if r is None or r <= 0:
        return False
    return p == q.scale(r)


def equality_resolution(c):
    """Eliminate ``x != s`` literals by substituting ``x := s``; None if valid."""
    while True:
        hit = _split_var_eq(c)
        if hit is None:
            return c
        v, sol, pair = hit
        rest = frozenset(x for x in c if x not in pair)
        c = L.clause_substitute(rest, {v: sol})
        if c is None:
            return None


def _freeze(c):
    sigma = {v: L.App(f"?{v.name}", (), v.sort) for v in L.clause_vars(c)}
    back = {a: v for v, a in sigma.items()}
    return L.clause_substitute(c, sigma), back


def _unfreeze(c, back):
    return L.clause_replace(c, back)


def assumption_context(assumptions: Sequence[L.Formula], names: L.NameSupply | None = None):
    """Ground clauses and universal clauses of the assumptions."""
    names = names or L.NameSupply()
    ground, universal = [], []
    for a in assumptions:
        try:
            cls, _ = L.skolemize_and_clausify(a, names)
        except (L.NestedSkolemError, L.BlowupError):
            continue
        for c in cls:
            (universal if L.clause_vars(c) else ground).append(c)
    return ground, universal


def simplify_clauses(clauses: Sequence, assumptions: Sequence[L.Formula] = (), *,
                     config: SolverConfig | None = None) -> list:
    """Equality resolution, subsumption and atom decisions under the assumptions."""
    solver = GroundSolver(config)
    ground, universal = assumption_context(assumptions)
    usyms = set()
    for c in universal:
        for a in L.clause_apps(c):
            if a.args:
                usyms.add(a.fn)
    out = []
    for c in clauses:
        c = equality_resolution(c)
        if c is None:
            continue
        fc, back = _freeze(c)
        if fc is None:
            continue
        T = set()
        for cc in [fc, *ground]:
            for a in L.clause_apps(cc):
                if a.args and a.fn in usyms:
                    T.add(a)
        ctx = list(ground) + (instantiate(universal, T, usyms) if T else [])
        if ctx:
            # the clause follows from the assumptions
            negs = [frozenset(x.negate()) for x in fc]
            if solver.solve(ctx + negs).status == "unsat":
                continue
            keep = []
            for x in sorted(fc):
                if solver.solve(ctx + [frozenset([x])]).status == "unsat":
                    continue
                keep.append(x)
            fc = frozenset(keep)
        c2 = _unfreeze(fc, back)
        if c2 is None:
            continue
        out.append(c2)
    return _dedupe([tidy_vars(c) for c in out])


def tidy_vars(c, taken: Iterable[str] = ()):
    """Rename ``d_0``-style variables to their base name when that is unambiguous."""
    vs = sorted(L.clause_vars(c), key=lambda v: v.name)
    used = set(taken) | {a.fn for a in L.clause_apps(c)}
    sigma, names = {}, set()
    for v in vs:
        base = v.name.rstrip("0123456789").rstrip("_") if "_" in v.name else v.name
        base = base or v.name
        if base in used or base in names or any(u.name == base for u in vs if u != v):
            base = v.name
        names.add(base)
        if base != v.name:
            sigma[v] = L.Var(base, v.sort)
    if not sigma:
        return c
    out = L.clause_substitute(c, sigma)
    return c if out is None else out


def drop_entailed(clauses: Sequence, plan: LevelPlan, background: Sequence[L.Formula],
                  options: Options | None = None, *, assumptions: Sequence[L.Formula] = ()) -> list:
    """Remove clauses valid modulo the background axioms (and assumptions)."""
    if not background and not assumptions:
        return list(clauses)
    out = []
    for c in clauses:
        if entails(list(background) + list(assumptions), L.universal_closure(L.clause_formula(c)), plan, options):
            continue
        out.append(c)
    return out


# --------------------------------------------------------------------------
# entailment between constraints


def entails(premises: Sequence[L.Formula], phi: L.Formula, plan: LevelPlan, options: Options | None = None,
            extra_terms: Iterable = ()) -> bool:
    """True when ``premises |= phi`` is proved by instantiation."""
    v = refute(L.nnf(L.Not(phi)), plan, options, axioms=premises, extra_terms=extra_terms)
    return v.status == "holds"


def equivalent(a: L.Formula, b: L.Formula, plan: LevelPlan, *, premises: Sequence[L.Formula] = (),
               options: Options | None = None) -> tuple[bool, bool]:
    """Mutual entailment of ``a`` and ``b`` (each under ``premises``)."""
    return (entails([*premises, a], b, plan, options), entails([*premises, b], a, plan, options))


# --------------------------------------------------------------------------
# problem-level driver


def synthesize_vcs(vcs: Sequence, problem, options: Options | None = None, *, trace=None, extra_terms=(),
                   config: SynthesisConfig | None = None) -> SynthesisResult:
    """Conjunction of the constraints derived for each verification condition."""
    options = options or Options()
    config = config or SynthesisConfig()
    params = set(problem.params)
    parts, clauses = [], []
    status, reason = "ok", ""
    weakest = True
    for vc in vcs:
        if vc.blocked:
            status, reason, weakest = "unknown", f"{vc.name}: {vc.blocked}", False
            parts.append(SynthesisResult("unknown", reason=vc.blocked, trace={"vc": vc.name}))
            continue
        names = L.NameSupply(problem.signature.names())
        r = symbol_eliminate(vc.goal, vc.plan, params, background=vc.background, names=names,
                             extra_terms=tuple(vc.extra_terms) + tuple(extra_terms), options=options,
                             trace=trace, minimise=config.minimise, force_eliminate=vc.force_eliminate)
        r.trace["vc"] = vc.name
        r.weakest = r.weakest and vc.exact
        if r.status != "ok":
            status, reason = "unknown", f"{vc.name}: {r.reason}"
            weakest = False
            parts.append(r)
            continue
        cs = r.clauses
        if config.simplify:
            cs = simplify_clauses(cs, vc.assumptions)
            if config.drop_entailed:
                cs = drop_entailed(cs, vc.plan, vc.background, options)
        r.clauses = cs
        r.trace["final"] = [L.format_formula(L.universal_closure(L.clause_formula(c))) for c in cs]
        weakest = weakest and r.weakest
        parts.append(r)
        clauses.extend(cs)
    return SynthesisResult(status, _dedupe(clauses), weakest and status == "ok", reason, parts=parts,
                           trace={"vcs": [p.trace for p in parts]})


def verify_constraint(problem, result: SynthesisResult, options: Options | None = None):
    """Re-check the problem with the derived constraint assumed."""
    from .sysver import check_invariant, with_assumptions

    return check_invariant(with_assumptions(problem, [result.constraint]), options)
