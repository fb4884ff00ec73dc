"""Verification conditions for hybrid automata and indexed families.

Continuous variables become unary functions of time, applied at real
time constants ``t0`` and ``t1``.  For a (parametric) linear automaton
the flow of mode ``q`` over ``[t0, t1]`` is replaced by its slope form

    sum_i c_i * (x_i(t1) - x_i(t0))  <=  c * (t1 - t0)

which is exact for flows given by non-strict linear inequalities over
the derivatives.  One-variable automata with a flow ``dot(x) = f(x, t)``
are handled by finitely many mean-value instances; those conditions are
sufficient only, so a satisfiable instance is reported as unknown.
"""

from __future__ import annotations

from . import logic as L
from .engine import plan_levels
from .specfile import DOT, DT, TIME, FamilySystem, HybridAutomaton, Problem, ProblemError

MV_UNSUPPORTED = "PHA multi-variable unsupported"


def _time(name: str) -> L.App:
    return L.App(name, (), L.REAL)


def _time_names(problem: Problem) -> tuple:
    pts = tuple(problem.points) or ("t0", "t1")
    if len(pts) < 2:
        raise ProblemError("points needs at least two time instants")
    if len(set(pts)) != len(pts):
        raise ProblemError("points lists an instant twice")
    taken = problem.signature.names()
    for p in pts:
        if p in taken:
            raise ProblemError(f"time instant {p} clashes with a declared symbol")
    return pts


def _order(pts) -> L.Formula:
    return L.conj(*[L.rel("<", _time(a), _time(b)) for a, b in zip(pts, pts[1:])])


# --------------------------------------------------------------------------
# evaluating state formulas at an instant


def at_time(phi: L.Formula, xs, tc: L.Term, *, post: bool = False) -> L.Formula:
    """``phi`` with every continuous variable ``x`` read as ``x(tc)``.

    Primed variables in jump conditions become ``x'(tc)``; ``post`` reads
    unprimed variables as their primed copies (the state after a jump).
    The reserved symbol ``t`` becomes ``tc``.
    """
    xs = set(xs)

    def fn(s):
        if not isinstance(s, L.App) or s.args:
            return None
        if s.fn == TIME:
            return tc
        if s.fn in xs:
            return L.App(s.fn + "'" if post else s.fn, (tc,), s.sort)
        if s.fn.endswith("'") and s.fn[:-1] in xs:
            return L.App(s.fn, (tc,), s.sort)
        return None

    return _map_terms(phi, fn)


def _map_terms(phi, fn):
    def atom(a):
        if a == L.TRUE or a == L.FALSE:
            return a
        return L.rebuild_atom(a, lambda t: L.map_term(t, fn))

    return L.map_atoms(phi, atom)


def _flow_atoms(flow: L.Formula, mode: str) -> list:
    """The conjuncts of a flow condition as ``Rel`` atoms."""
    if flow == L.TRUE:
        return []
    parts = flow.args if isinstance(flow, L.And) else (flow,)
    out = []
    for p in parts:
        if not isinstance(p, L.Rel):
            raise ProblemError(f"mode {mode}: flow must be a conjunction of linear inequalities")
        out.append(p)
    return out


def _is_dot(a) -> bool:
    return isinstance(a, L.App) and a.fn == DOT


def _split_dots(p: L.Poly, mode: str):
    """``p = sum_x coef_x * dot(x) + rest``; returns ``(coefs, rest)``."""
    coefs: dict = {}
    rest: dict = {}
    for m, c in p.terms:
        dots = [(a, e) for a, e in m if _is_dot(a)]
        if not dots:
            rest[m] = rest.get(m, 0) + c
            continue
        if len(dots) > 1 or dots[0][1] != 1:
            raise ProblemError(f"mode {mode}: flow is not linear in the derivatives")
        x = dots[0][0].args[0]
        x = L.unwrap(x).fn
        m2 = tuple((a, e) for a, e in m if not _is_dot(a))
        d = coefs.setdefault(x, {})
        d[m2] = d.get(m2, 0) + c
    return {x: L.Poly.from_dict(d) for x, d in coefs.items()}, L.Poly.from_dict(rest)


def _mentions(p: L.Term, names) -> bool:
    names = set(names)
    return any(isinstance(s, L.App) and s.fn in names for s in L.subterms(p))


def _has_apps(p: L.Term) -> bool:
    return any(isinstance(s, L.App) and s.args for s in L.subterms(p))


def underflow(ha: HybridAutomaton, mode, params, t0: L.Term, t1: L.Term) -> L.Formula:
    """Slope form of a linear flow condition between ``t0`` and ``t1``."""
    xs = list(ha.vars)
    dt = L.as_poly(t1) - L.as_poly(t0)
    out = []
    for r in _flow_atoms(mode.flow, mode.name):
        if r.op == "<":
            raise ProblemError(
                f"mode {mode.name}: strict flow inequality; linear flows must be non-strict inequalities")
        coefs, rest = _split_dots(r.poly, mode.name)
        if not coefs:
            raise ProblemError(f"mode {mode.name}: flow atom without a derivative")
        for x, c in coefs.items():
            if _mentions(c, xs + [TIME]) or _has_apps(c):
                raise ProblemError(f"mode {mode.name}: coefficient of dot({x}) must be a number or parameter")
            if ha.kind == "lha" and not c.is_const():
                raise ProblemError(f"mode {mode.name}: lha flows need numeric coefficients (use plha)")
        if _mentions(rest, xs):
            raise ProblemError(f"mode {mode.name}: flow bound depends on a continuous variable")
        if _mentions(rest, [TIME]) or _has_apps(rest):
            raise ProblemError(f"mode {mode.name}: time-dependent flow bounds are not supported")
        if ha.kind == "lha" and not rest.is_const():
            raise ProblemError(f"mode {mode.name}: lha flows need numeric bounds (use plha)")
        bad = [s.fn for s in L.subterms(rest) if isinstance(s, L.App) and not s.args
               and params is not None and s.fn not in params]
        if ha.kind == "plha" and bad and params is not None:
            raise ProblemError(f"mode {mode.name}: flow bound uses {bad[0]}, which is not a parameter")
        lhs = rest * dt
        for x, c in coefs.items():
            lhs = lhs + c * (L.as_poly(L.App(x, (t1,), L.REAL)) - L.as_poly(L.App(x, (t0,), L.REAL)))
        if r.op == "=":
            out.append(L.make_rel("<=", lhs))
            out.append(L.make_rel("<=", -lhs))
        else:
            out.append(L.make_rel("<=", lhs))
    return L.conj(*out)


# --------------------------------------------------------------------------
# sign facts for slope atoms


def _slope_parts(p: L.Poly, t0: L.Term, t1: L.Term):
    """Write ``p = A + B * (t1 - t0)`` with ``A``, ``B`` free of both instants."""
    A, B1, B0 = {}, {}, {}
    for m, c in p.terms:
        hit = [(a, e) for a, e in m if a in (t0, t1)]
        if not hit:
            A[m] = A.get(m, 0) + c
            continue
        if len(hit) > 1 or hit[0][1] != 1:
            return None
        m2 = tuple(f for f in m if f[0] not in (t0, t1))
        d = B1 if hit[0][0] == t1 else B0
        d[m2] = d.get(m2, 0) + c
    B = L.Poly.from_dict(B1)
    if B != -L.Poly.from_dict(B0):
        return None
    return L.Poly.from_dict(A), B


def slope_hints(phi: L.Formula, t0: L.Term, t1: L.Term) -> L.Formula:
    """Add to each atom ``A + B*(t1 - t0) op 0`` the sign facts it implies when ``t0 < t1``.

    The linear solver treats ``B*t1`` as an opaque product; the facts
    ``B >= 0 -> A <= 0`` (and friends) are the part of the atom it can use.
    Each replacement is an equivalence under ``t0 < t1``.
    """
    t0, t1 = L.unwrap(t0), L.unwrap(t1)

    def atom(a):
        if not isinstance(a, L.Rel):
            return a
        parts = _slope_parts(a.poly, t0, t1)
        if parts is None:
            return a
        A, B = parts
        if B.is_const() or A.is_const():
            return a
        facts = [L.disj(L.rel("<", B, 0), L.rel("<=", A, 0)), L.disj(L.rel("<=", B, 0), L.rel("<", A, 0))]
        if a.op == "=":
            facts += [L.disj(L.rel(">", B, 0), L.rel(">=", A, 0)), L.disj(L.rel(">=", B, 0), L.rel(">", A, 0))]
        elif a.op == "<":
            facts = [L.disj(L.rel("<", B, 0), L.rel("<", A, 0))]
        return L.conj(a, *facts)

    return L.map_atoms(phi, atom)


# --------------------------------------------------------------------------
# VC generation


def _plan(problem: Problem, ha, extra=()):
    base = plan_levels(problem)
    lv = base.top + 1
    syms = {x: lv for x in ha.vars}
    syms.update({x + "'": lv for x in ha.vars})
    syms.update({s: lv for s in extra})
    return base.with_symbols(syms, cert="free")


def _negated(problem: Problem) -> L.Formula:
    from .sysver import negated_property

    return negated_property(problem)


def _vc(problem, name, goal, plan, kind, **kw):
    from .sysver import VC, background

    return VC(name, goal, plan, tuple(problem.assumptions), tuple(background(problem)), kind=kind, **kw)


def _flow_vc(problem, name, goal, plan, t0, t1, **kw):
    return _vc(problem, name, goal, plan, "flow", hinted=slope_hints(goal, t0, t1), **kw)


def lha_vcs(problem: Problem) -> list:
    """Init, flow and jump conditions of a (parametric) linear hybrid automaton."""
    ha = problem.system
    pts = _time_names(problem)
    t0, t1 = _time(pts[0]), _time(pts[-1])
    plan = _plan(problem, ha)
    xs = ha.vars
    phi, bad = problem.invariant, _negated(problem)
    params = set(problem.params)
    out = []
    for m in ha.modes:
        out.append(_vc(problem, f"init:{m.name}", L.conj(at_time(m.init, xs, t0), at_time(bad, xs, t0)),
                       plan, "init"))
    for m in ha.modes:
        goal = L.conj(L.rel("<", t0, t1), at_time(m.inv, xs, t0), at_time(phi, xs, t0),
                      underflow(ha, m, params, t0, t1), at_time(m.inv, xs, t1), at_time(bad, xs, t1))
        out.append(_flow_vc(problem, f"flow:{m.name}", goal, plan, t0, t1))
    out.extend(jump_vcs(problem, plan, t0))
    return out


def jump_vcs(problem: Problem, plan, t0: L.Term) -> list:
    """One condition per edge; the post state is ``x'`` at the same instant."""
    ha = problem.system
    xs = ha.vars
    out = []
    for e in ha.edges:
        src, dst = ha.mode(e.src), ha.mode(e.dst)
        goal = L.conj(at_time(src.inv, xs, t0), at_time(problem.invariant, xs, t0), at_time(e.guard, xs, t0),
                      at_time(e.jump, xs, t0), at_time(dst.inv, xs, t0, post=True),
                      at_time(_negated(problem), xs, t0, post=True))
        out.append(_vc(problem, f"jump:{e.name}", goal, plan, "jump"))
    return out


def _pha_rhs(ha: HybridAutomaton, mode) -> L.Poly:
    """Right-hand side ``F`` of a flow ``dot(x) = F``."""
    atoms = _flow_atoms(mode.flow, mode.name)
    if len(atoms) != 1 or atoms[0].op != "=":
        raise ProblemError(f"mode {mode.name}: pha flow must be a single equation dot(x) = F")
    coefs, rest = _split_dots(atoms[0].poly, mode.name)
    if len(coefs) != 1:
        raise ProblemError(f"mode {mode.name}: pha flow must be a single equation dot(x) = F")
    (x, c), = coefs.items()
    if not c.is_const():
        raise ProblemError(f"mode {mode.name}: the coefficient of dot({x}) must be numeric")
    return rest.scale(-1 / c.const_value())


def pha_instantiate(problem: Problem, mode, *, points=None, slopes=None, names: L.NameSupply | None = None):
    """Mean-value instances of the flow of ``mode``.

    ``points`` are the instants (ordered, first and last bound the flow
    interval); the invariant is instantiated at each.  ``slopes`` are the
    instant pairs that receive a slope equation with a fresh witness
    ``c``; it defaults to consecutive pairs of ``points``.  Returns the
    goal formula and the new terms ``x(p)`` for the instantiation set.
    """
    ha = problem.system
    (x,) = ha.vars
    pts = tuple(points or _time_names(problem))
    if slopes is None:
        slopes = list(zip(pts, pts[1:]))
    names = names or L.NameSupply(problem.signature.names() | set(pts))
    F = _pha_rhs(ha, mode)
    parts = [_order(pts)]
    for p in pts:
        parts.append(at_time(mode.inv, ha.vars, _time(p)))
    witnesses = []
    for a, b in slopes:
        ta, tb = _time(a), _time(b)
        w = _time("c" if "c" not in names.used else names.fresh("c"))
        names.reserve([w.fn])
        witnesses.append(w.fn)
        xw = L.App(x, (w,), L.REAL)
        rhs = L.map_term(F, lambda s: xw if s == L.App(x, (), L.REAL) else (w if s == _time(TIME) else None))
        dx = L.as_poly(L.App(x, (tb,), L.REAL)) - L.as_poly(L.App(x, (ta,), L.REAL))
        parts.append(L.rel("<=", ta, w))
        parts.append(L.rel("<=", w, tb))
        # slope equation with the denominator cleared under a < b
        parts.append(L.rel("=", dx, L.as_poly(rhs) * (L.as_poly(tb) - L.as_poly(ta))))
    t0, t1 = _time(pts[0]), _time(pts[-1])
    parts.append(at_time(problem.invariant, ha.vars, t0))
    parts.append(at_time(_negated(problem), ha.vars, t1))
    terms = [L.App(x, (_time(p),), L.REAL) for p in pts]
    return L.conj(*parts), terms, witnesses


def pha_vcs(problem: Problem) -> list:
    ha = problem.system
    pts = _time_names(problem)
    t0 = _time(pts[0])
    plan = _plan(problem, ha)
    xs = ha.vars
    bad = _negated(problem)
    out = [_vc(problem, f"init:{m.name}", L.conj(at_time(m.init, xs, t0), at_time(bad, xs, t0)), plan, "init")
           for m in ha.modes]
    for m in ha.modes:
        name = f"flow:{m.name}"
        if len(xs) != 1:
            out.append(_vc(problem, name, L.TRUE, plan, "flow", exact=False, blocked=MV_UNSUPPORTED))
            continue
        goal, terms, _ = pha_instantiate(problem, m, points=pts)
        out.append(_flow_vc(problem, name, goal, plan, t0, _time(pts[-1]), extra_terms=tuple(terms),
                            exact=False, force_eliminate=tuple(pts)))
    out.extend(jump_vcs(problem, plan, t0))
    return out


def hybrid_vcs(problem: Problem) -> list:
    ha = problem.system
    if not isinstance(ha, HybridAutomaton):
        raise TypeError("not a hybrid automaton")
    if ha.kind == "pha":
        return pha_vcs(problem)
    return lha_vcs(problem)


# --------------------------------------------------------------------------
# indexed families


class FamilyOffsetError(ValueError):
    pass


def _index_offsets(phi: L.Formula, index_vars: set) -> set:
    """Offsets ``k`` of argument terms ``i + k`` (``i`` an index variable)."""
    out = set()
    for t in L.formula_terms(phi):
        for s in L.subterms(t):
            if isinstance(s, L.App):
                for a in s.args:
                    p = L.as_poly(a)
                    vs = [v for v in p.atoms() if isinstance(v, L.Var) and v in index_vars]
                    if vs and p.without_const() == L.as_poly(vs[0]):
                        out.add(p.const_value())
    return out


def _index_vars(phi: L.Formula, sort) -> set:
    out = set()

    def go(f):
        if isinstance(f, (L.Forall, L.Exists)):
            out.update(v for v in f.vars if v.sort == sort)
            go(f.body)
        elif isinstance(f, L.Not):
            go(f.arg)
        elif isinstance(f, (L.And, L.Or)):
            for a in f.args:
                go(a)
        elif isinstance(f, (L.Implies, L.Iff)):
            go(f.lhs)
            go(f.rhs)

    go(phi)
    return out


def instantiate_index(phi: L.Formula, sort, points) -> L.Formula:
    """Replace each universal over ``sort`` by its instances at ``points`` (NNF input)."""
    if isinstance(phi, (L.Rel, L.PredAtom, L.BoolConst)):
        return phi
    if isinstance(phi, L.And):
        return L.conj(*[instantiate_index(a, sort, points) for a in phi.args])
    if isinstance(phi, L.Or):
        return L.disj(*[instantiate_index(a, sort, points) for a in phi.args])
    if isinstance(phi, L.Forall):
        idx = [v for v in phi.vars if v.sort == sort]
        body = instantiate_index(phi.body, sort, points)
        others = tuple(v for v in phi.vars if v.sort != sort)
        if not idx:
            return L.forall(others, body)
        inst = [body]
        for v in idx:
            inst = [L.substitute(b, {v: p}) for b in inst for p in points]
        return L.forall(others, L.conj(*inst)) if others else L.conj(*inst)
    if isinstance(phi, L.Exists):
        return L.exists(phi.vars, instantiate_index(phi.body, sort, points))
    raise TypeError(phi)


def _skolemize_index(phi: L.Formula, sort, names: L.NameSupply):
    """Outer existentials over ``sort`` become fresh constants."""
    consts = []

    def go(f):
        if isinstance(f, L.And):
            return L.conj(*[go(a) for a in f.args])
        if isinstance(f, L.Or):
            return L.disj(*[go(a) for a in f.args])
        if isinstance(f, L.Exists):
            sigma = {}
            for v in f.vars:
                if v.sort == sort:
                    nm = v.name + "0" if v.name + "0" not in names.used else names.fresh(v.name)
                    names.reserve([nm])
                    c = L.App(nm, (), v.sort)
                    consts.append(c)
                    sigma[v] = c
            rest = tuple(v for v in f.vars if v not in sigma)
            body = go(L.substitute(f.body, sigma))
            return L.exists(rest, body) if rest else body
        return f

    return go(phi), consts


def family_at(phi: L.Formula, fam: FamilySystem, tc: L.Term, tn: L.Term | None = None) -> L.Formula:
    """Read ``L(i)`` as ``L(i, tc)``, ``L'(i)`` as ``L(i, tn)`` and ``dt`` as ``tn - tc``."""
    vs = set(fam.vars)

    def fn(s):
        if not isinstance(s, L.App):
            return None
        if s.fn in vs:
            return L.App(s.fn, s.args + (tc,), s.sort)
        if s.fn.endswith("'") and s.fn[:-1] in vs and tn is not None:
            return L.App(s.fn[:-1], s.args + (tn,), s.sort)
        if s.fn == DT and not s.args and tn is not None:
            return L.as_poly(tn) - L.as_poly(tc)
        return None

    return _map_terms(phi, fn)


def family_expand(problem: Problem):
    """Ground flow condition of an indexed family.

    The existential index of the violated property becomes ``i0``; every
    universal over the index sort is instantiated at ``i0`` (and at
    ``i0 - 1`` / ``i0 + 1`` when the property itself uses offsets).
    Returns ``(goal, index constants)``.
    """
    fam = problem.system
    sig = problem.signature
    if not fam.vars:
        raise ProblemError("family system without variables")
    sorts = {sig.functions[v].arg_sorts[0] for v in fam.vars if sig.functions[v].arity}
    if len(sorts) != 1:
        raise ProblemError("family variables must be unary functions over one index sort")
    (sort,) = sorts
    pts = _time_names(problem)
    t0, t1 = _time(pts[0]), _time(pts[-1])
    names = L.NameSupply(sig.names() | set(pts))
    phi = problem.invariant
    bad = L.nnf(_negated(problem))
    every = L.conj(phi, bad, fam.flow, *problem.assumptions)
    offs = _index_offsets(every, _index_vars(every, sort) | _index_vars(L.nnf(L.Not(phi)), sort))
    if any(abs(k) > 1 for k in offs):
        raise FamilyOffsetError("index offsets beyond 1 leave the instantiation set undefined")
    bad1, consts = _skolemize_index(family_at(bad, fam, t1), sort, names)
    if not consts:
        raise ProblemError("the violated property has no existential index")
    points = list(consts)
    phi_offs = _index_offsets(L.nnf(L.Not(phi)), _index_vars(L.nnf(L.Not(phi)), sort))
    if phi_offs - {0}:
        points += [L.as_poly(c) + d for c in consts for d in (-1, 1)]
    parts = [L.rel("<", t0, t1), instantiate_index(L.nnf(family_at(phi, fam, t0)), sort, points),
             instantiate_index(L.nnf(family_at(fam.flow, fam, t0, t1)), sort, points),
             instantiate_index(bad1, sort, points)]
    return L.conj(*parts), consts


def family_vcs(problem: Problem) -> list:
    fam = problem.system
    plan = plan_levels(problem)
    top = plan.top + 1
    plan = plan.with_symbols({v: top for v in fam.vars}, cert="free")
    try:
        goal, _ = family_expand(problem)
    except FamilyOffsetError as e:
        return [_vc(problem, "flow", L.TRUE, plan, "flow", exact=False, blocked=str(e))]
    pts = _time_names(problem)
    return [_flow_vc(problem, "flow", goal, plan, _time(pts[0]), _time(pts[-1]), exact=False)]
