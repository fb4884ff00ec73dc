"""From formulas to reduced ground problems.

A verification condition is a closed formula to be refuted.  It is
Skolemised and clausified; ground clauses form the goal and every
non-ground clause is attached to the extension level of its highest
extension symbol.  The resulting chain is reduced hierarchically and the
base problem is handed to the ground solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from . import logic as L
from .ground import SAT, UNKNOWN, UNSAT, GroundSolver, SolverConfig
from .locality import (CERTIFICATES, ExtensionLevel, NonGroundInstanceError, Reduction, certificate,
                       hierarchical_reduce)


class UnknownError(RuntimeError):
    """The problem could not be decided; carries a reason."""


@dataclass
class Options:
    cube_limit: int = 4096
    branch_depth: int = 8
    jobs: int = 1

    def solver_config(self) -> SolverConfig:
        return SolverConfig(cube_limit=self.cube_limit, branch_depth=self.branch_depth)


@dataclass
class LevelPlan:
    """Level of every extension symbol, with the declared certificates."""

    levels: dict  # symbol -> level number
    certs: dict  # level number -> certificate name
    waived: set = field(default_factory=set)

    @property
    def top(self) -> int:
        return max(self.levels.values(), default=0)

    def with_symbols(self, mapping: dict, cert: str | None = None) -> "LevelPlan":
        lv = dict(self.levels)
        lv.update(mapping)
        certs = dict(self.certs)
        if cert:
            for n in set(mapping.values()):
                certs.setdefault(n, cert)
        return LevelPlan(lv, certs, set(self.waived))


def plan_levels(problem, *, extra_free: Iterable[str] = ()) -> LevelPlan:
    """Assign declared level numbers; undeclared function symbols go to level 0."""
    sig = problem.signature
    levels: dict = {}
    certs: dict = {}
    waived = set()
    for decl in sorted(problem.levels, key=lambda d: d.level):
        certs[decl.level] = decl.certificate
        if decl.waived:
            waived.add(decl.level)
        if decl.symbols is not None:
            syms = decl.symbols
        else:
            syms = set()
            for c in decl.clauses:
                for a in L.formula_apps(L.encode_predicates(c)):
                    if a.args:
                        syms.add(a.fn)
        for s in sorted(syms):
            levels.setdefault(s, decl.level)
    for name, d in sig.functions.items():
        if d.arity and name not in levels:
            levels[name] = 0
    for name in sig.predicates:
        levels.setdefault(name, 0)
    for name in extra_free:
        levels.setdefault(name, 0)
    return LevelPlan(levels, certs, waived)


@dataclass
class Goal:
    """A clausified verification condition."""

    ground: list
    axioms: list  # non-ground clauses
    skolems: list
    chain: list
    origins: list
    uncertified: list = field(default_factory=list)


def clausify(phi: L.Formula, names: L.NameSupply, limit: int = 100000):
    try:
        return L.skolemize_and_clausify(phi, names, limit)
    except L.BlowupError as e:
        raise UnknownError(str(e))
    except L.NestedSkolemError as e:
        raise UnknownError(str(e))


def clause_level(c, plan: LevelPlan) -> int | None:
    best = None
    for a in L.clause_apps(c):
        if a.args:
            lv = plan.levels.get(a.fn)
            if lv is None:
                lv = 0
            best = lv if best is None else max(best, lv)
    return best


def build_goal(phi: L.Formula, plan: LevelPlan, names: L.NameSupply, *, axioms: Iterable[L.Formula] = ()) -> Goal:
    """Clausify ``phi`` (and extra axioms) and attach clauses to levels."""
    ground, nonground, origins = [], [], []
    skolems = []
    parts = [(phi, "goal")] + [(a, "axiom") for a in axioms]
    for f, tag in parts:
        cls, sk = clausify(f, names)
        skolems.extend(sk)
        for c in cls:
            if L.clause_vars(c):
                nonground.append(c)
            else:
                ground.append(c)
                origins.append(tag)
    chain, uncertified = build_chain(nonground, plan)
    return Goal(ground, nonground, skolems, chain, origins, uncertified)


AUTO_CERTIFICATES = ("bounded", "monotone")


def build_chain(clauses: Sequence, plan: LevelPlan) -> tuple[list, list]:
    """Group clauses into levels; returns ``(chain, uncertified)``.

    Levels without a declared certificate are certified automatically when
    possible.  ``uncertified`` lists ``(level, reason)`` pairs for levels whose
    certificate fails its check; refutations stay sound there, but a
    satisfiable reduction no longer yields a countermodel.
    """
    by_level: dict = {}
    for c in clauses:
        lv = clause_level(c, plan)
        if lv is None:
            raise UnknownError(
                f"non-ground instance: clause {L.format_clause(c)} has no extension symbol to instantiate")
        by_level.setdefault(lv, []).append(c)
    syms_by_level: dict = {}
    for s, lv in plan.levels.items():
        syms_by_level.setdefault(lv, set()).add(s)
    chain, uncertified = [], []
    for lv in sorted(set(syms_by_level) | set(by_level)):
        cls = list(by_level.get(lv, []))
        syms = frozenset(syms_by_level.get(lv, set()))
        declared = plan.certs.get(lv)
        level = ExtensionLevel(lv, syms, cls, certificate("free"), name=f"level {lv}")
        if declared is not None:
            level.certificate = certificate(declared)
            issues = [] if level.certificate.waived or lv in plan.waived else level.check_certificate()
            if issues:
                uncertified.append((lv, f"certificate {declared} fails: {issues[0]}"))
        elif cls:
            for name in AUTO_CERTIFICATES:
                level.certificate = certificate(name)
                if not level.check_certificate():
                    break
            else:
                level.certificate = certificate("asserted")
                uncertified.append((lv, "no locality certificate applies"))
        chain.append(level)
    return chain, uncertified


@dataclass
class Verdict:
    status: str  # holds | fails | unknown
    model: dict | None = None
    reason: str = ""
    reduction: Reduction | None = None
    goal: Goal | None = None

    def named_model(self) -> dict:
        """Model restricted to user-visible constants and function values."""
        if not self.model:
            return {}
        out = {}
        env = self.model
        for a, v in env.items():
            if isinstance(a, L.App) and not a.args and not a.fn.startswith("_"):
                out[a.fn] = v
        if self.reduction is not None:
            m = self.reduction.subst_map()
            for c, term in m.items():
                if c in env and isinstance(term, L.App):
                    try:
                        args = [L.as_poly(x).evaluate(_with_default(env)) for x in term.args]
                    except KeyError:
                        continue
                    key = f"{term.fn}({', '.join(_fmt_q(x) for x in args)})"
                    out[key] = env[c]
        return out


class _with_default(dict):
    def __init__(self, env):
        super().__init__(env)

    def __missing__(self, key):
        return Fraction(0)


def _fmt_q(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def solve_goal(goal: Goal, options: Options, names: L.NameSupply, *, extra_terms: Iterable = ()) -> Verdict:
    try:
        red = hierarchical_reduce(goal.chain, goal.ground, extra_terms=extra_terms, names=names,
                                  name_arguments=True, origins=goal.origins)
    except NonGroundInstanceError as e:
        return Verdict("unknown", reason=str(e), goal=goal)
    try:
        res = GroundSolver(options.solver_config()).solve(red.clauses)
    except ValueError as e:
        return Verdict("unknown", reason=str(e), reduction=red, goal=goal)
    if res.status == UNSAT:
        return Verdict("holds", reduction=red, goal=goal)
    if res.status == SAT and goal.uncertified:
        lv, why = goal.uncertified[0]
        return Verdict("unknown", model=res.model, reason=f"level {lv}: {why}", reduction=red, goal=goal)
    if res.status == SAT:
        return Verdict("fails", model=res.model, reduction=red, goal=goal)
    return Verdict("unknown", reason=res.reason, reduction=red, goal=goal)


def refute(phi: L.Formula, plan: LevelPlan, options: Options | None = None, *, axioms=(),
           names: L.NameSupply | None = None, extra_terms=()) -> Verdict:
    """Try to show that ``phi`` (with ``axioms``) is unsatisfiable."""
    options = options or Options()
    names = names or L.NameSupply()
    for f in [phi, *axioms]:
        names.reserve(a.fn for a in L.formula_apps(L.encode_predicates(f)))
    try:
        goal = build_goal(phi, plan, names, axioms=axioms)
    except UnknownError as e:
        return Verdict("unknown", reason=str(e))
    return solve_goal(goal, options, names, extra_terms=extra_terms)


def reduce_formula(phi: L.Formula, plan: LevelPlan, *, axioms=(), names: L.NameSupply | None = None,
                   extra_terms=()) -> tuple[Goal, Reduction]:
    """Clausify and reduce without solving; raises :class:`UnknownError`."""
    names = names or L.NameSupply()
    for f in [phi, *axioms]:
        names.reserve(a.fn for a in L.formula_apps(L.encode_predicates(f)))
    goal = build_goal(phi, plan, names, axioms=axioms)
    try:
        red = hierarchical_reduce(goal.chain, goal.ground, extra_terms=extra_terms, names=names,
                                  name_arguments=True, origins=goal.origins)
    except NonGroundInstanceError as e:
        raise UnknownError(str(e))
    return goal, red


# --------------------------------------------------------------------------
# renaming helpers


def rename_symbols(phi: L.Formula, mapping: dict) -> L.Formula:
    """Rename function/constant symbols (by name) throughout ``phi``."""
    if not mapping:
        return phi

    def fn(s):
        if isinstance(s, L.App) and s.fn in mapping:
            return L.App(mapping[s.fn], s.args, s.sort)
        return None

    def atom(a):
        if isinstance(a, L.PredAtom):
            return L.PredAtom(mapping.get(a.name, a.name), tuple(L.map_term(x, fn) for x in a.args))
        return L.rebuild_atom(a, lambda t: L.map_term(t, fn))

    return L.map_atoms(phi, atom)


def prime_map(symbols: Iterable[str]) -> dict:
    return {s: s + "'" for s in symbols}
