"""Invariant checking, constraint synthesis and bounded model checking
for parametric transition systems.

A transition system has state constants and state functions; each named
update rule relates the unprimed (pre) and primed (post) copies.  The
verification conditions are

* ``init``:    Gamma /\\ Init /\\ not Phi
* ``<rule>``:  Gamma /\\ Phi /\\ rule /\\ not Phi'

with the level axioms of the problem as background.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import logic as L
from .engine import LevelPlan, Options, Verdict, plan_levels, refute, rename_symbols
from .specfile import Problem, TransitionSystem

HOLDS, FAILS, UNKNOWN = "holds", "fails", "unknown"


@dataclass
class VC:
    """A named verification condition.

    ``goal`` is the system part, ``assumptions`` the Gamma conjuncts and
    ``background`` the level axioms.  The VC is valid when the conjunction
    of all three is unsatisfiable.
    """

    name: str
    goal: L.Formula
    plan: LevelPlan
    assumptions: tuple = ()
    background: tuple = ()
    kind: str = "update"
    extra_terms: tuple = ()
    exact: bool = True  # a countermodel of the VC is a real counterexample
    blocked: str = ""  # set when the VC cannot be generated; verdict is unknown
    force_eliminate: tuple = ()  # constants always eliminated during synthesis
    hinted: L.Formula | None = None  # goal plus implied facts; used for checking only

    def formula(self) -> L.Formula:
        return L.conj(*self.assumptions, self.goal if self.hinted is None else self.hinted)


@dataclass
class VCResult:
    name: str
    status: str
    model: dict = field(default_factory=dict)
    reason: str = ""
    verdict: Verdict | None = None


@dataclass
class VerificationResult:
    status: str
    vcs: list = field(default_factory=list)
    case: int | None = None

    @property
    def failed(self) -> VCResult | None:
        for r in self.vcs:
            if r.status == FAILS:
                return r
        return None

    def reason(self) -> str:
        for r in self.vcs:
            if r.status != HOLDS:
                return f"{r.name}: {r.reason}" if r.reason else r.name
        return ""


# --------------------------------------------------------------------------
# levels and renaming


def state_symbols(sys: TransitionSystem) -> tuple[list, list]:
    return list(sys.vars), list(sys.funs)


def detect_case(problem: Problem) -> int:
    """Case 1: no functions; Case 2: functional parameters only; Case 3: function updates."""
    if problem.case:
        return problem.case
    sys = problem.system
    if isinstance(sys, TransitionSystem) and sys.funs:
        return 3
    if any(d.arity for d in problem.signature.functions.values()) or problem.signature.predicates:
        return 2
    return 1


def system_plan(problem: Problem) -> LevelPlan:
    """Levels of the problem, with primed state functions on a new top level."""
    plan = plan_levels(problem)
    sys = problem.system
    funs = list(sys.funs) if isinstance(sys, TransitionSystem) else []
    if funs:
        top = plan.top + 1
        plan = plan.with_symbols({f + "'": top for f in funs}, cert="update")
    return plan


def background(problem: Problem) -> list:
    out = []
    for decl in problem.levels:
        out.extend(decl.clauses)
    return out


def prime(phi: L.Formula, sys: TransitionSystem) -> L.Formula:
    vs, fs = state_symbols(sys)
    return rename_symbols(phi, {s: s + "'" for s in vs + fs})


def negated_property(problem: Problem) -> L.Formula:
    if problem.violation is not None:
        return problem.violation
    return L.nnf(L.Not(problem.invariant))


# --------------------------------------------------------------------------
# verification conditions


def vc_init(problem: Problem) -> VC:
    sys = problem.system
    plan = system_plan(problem)
    init = sys.init if isinstance(sys, TransitionSystem) else L.TRUE
    return VC("init", L.conj(init, negated_property(problem)), plan, tuple(problem.assumptions),
              tuple(background(problem)), kind="init")


def vc_update(problem: Problem, name: str, rule: L.Formula) -> VC:
    sys = problem.system
    plan = system_plan(problem)
    bad = prime(negated_property(problem), sys)
    goal = L.conj(problem.invariant, rule, bad)
    return VC(name, goal, plan, tuple(problem.assumptions), tuple(background(problem)), kind="update")


def system_vcs(problem: Problem) -> list:
    """All verification conditions, in declaration order."""
    kind = problem.system_kind
    if kind == "hybrid":
        from .hybrid import hybrid_vcs
        return hybrid_vcs(problem)
    if kind == "family":
        from .hybrid import family_vcs
        return family_vcs(problem)
    if kind == "none":
        plan = plan_levels(problem)
        return [VC("property", negated_property(problem), plan, tuple(problem.assumptions),
                   tuple(background(problem)), kind="property")]
    out = [vc_init(problem)]
    for name, rule in problem.system.updates:
        out.append(vc_update(problem, name, rule))
    return out


def select_vcs(vcs: list, name: str | None) -> list:
    if name is None:
        return vcs
    sel = [v for v in vcs if v.name == name]
    if not sel:
        raise KeyError(f"no verification condition named {name!r} (have: {', '.join(v.name for v in vcs)})")
    return sel


# --------------------------------------------------------------------------
# checking


def _name_supply(problem: Problem) -> L.NameSupply:
    return L.NameSupply(problem.signature.names())


def solve_vc(vc: VC, problem: Problem, options: Options | None = None) -> VCResult:
    options = options or Options()
    if vc.blocked:
        return VCResult(vc.name, UNKNOWN, {}, vc.blocked)
    v = refute(vc.formula(), vc.plan, options, axioms=vc.background, names=_name_supply(problem),
               extra_terms=vc.extra_terms)
    if v.status == FAILS and not vc.exact:
        return VCResult(vc.name, UNKNOWN, {}, "satisfiable abstraction; no counterexample claimed", v)
    model = v.named_model() if v.status == FAILS else {}
    return VCResult(vc.name, v.status, model, v.reason, v)


def aggregate(results: list) -> str:
    if any(r.status == FAILS for r in results):
        return FAILS
    if any(r.status == UNKNOWN for r in results):
        return UNKNOWN
    return HOLDS


def run_vcs(vcs: list, problem: Problem, options: Options | None = None) -> list:
    options = options or Options()
    if options.jobs > 1 and len(vcs) > 1:
        with ThreadPoolExecutor(max_workers=options.jobs) as ex:
            return list(ex.map(lambda v: solve_vc(v, problem, options), vcs))
    return [solve_vc(v, problem, options) for v in vcs]


def check_invariant(problem: Problem, options: Options | None = None, *, vc: str | None = None) -> VerificationResult:
    """Check that the invariant is inductive under the assumptions."""
    vcs = select_vcs(system_vcs(problem), vc)
    results = run_vcs(vcs, problem, options)
    return VerificationResult(aggregate(results), results, detect_case(problem))


def with_assumptions(problem: Problem, extra) -> Problem:
    """A copy of ``problem`` with ``extra`` formulas added to its assumptions."""
    import dataclasses

    if isinstance(extra, L.Formula):
        extra = [extra]
    return dataclasses.replace(problem, assumptions=tuple(problem.assumptions) + tuple(extra))


# --------------------------------------------------------------------------
# bounded model checking


def _copy_map(sys: TransitionSystem, i: int, primed_to: int | None = None) -> dict:
    vs, fs = state_symbols(sys)
    m = {s: f"{s}@{i}" for s in vs + fs}
    if primed_to is not None:
        m.update({s + "'": f"{s}@{primed_to}" for s in vs + fs})
    return m


def _bmc_plan(problem: Problem, k: int) -> LevelPlan:
    plan = plan_levels(problem)
    sys = problem.system
    top = plan.top
    mapping, certs = {}, dict(plan.certs)
    constrained = set()
    for decl in problem.levels:
        for c in decl.clauses:
            constrained |= {a.fn for a in L.formula_apps(L.encode_predicates(c))}
    for f in sys.funs:
        mapping[f"{f}@0"] = plan.levels.get(f, 0)
        for i in range(1, k + 1):
            mapping[f"{f}@{i}"] = top + i
            certs[top + i] = "asserted" if f in constrained else "update"
    levels = dict(plan.levels)
    levels.update(mapping)
    return LevelPlan(levels, certs, set(plan.waived))


def bmc_vcs(problem: Problem, k: int) -> list:
    """One condition per depth j <= k: some state reachable in j steps violates the property."""
    sys = problem.system
    if not isinstance(sys, TransitionSystem):
        raise ValueError("bounded model checking needs a transition system")
    if k < 0:
        raise ValueError("k must be non-negative")
    plan = _bmc_plan(problem, k)
    vs, fs = state_symbols(sys)
    state = set(vs) | set(fs)
    bad = negated_property(problem)
    out = []
    for j in range(k + 1):
        parts = [rename_symbols(sys.init, _copy_map(sys, 0))]
        for i in range(j):
            rules = [rename_symbols(r, _copy_map(sys, i, i + 1)) for _, r in sys.updates]
            parts.append(L.disj(*rules))
        parts.append(rename_symbols(bad, _copy_map(sys, j)))
        bg = []
        for ax in background(problem):
            syms = {a.fn for a in L.formula_apps(L.encode_predicates(ax))}
            if syms & state:
                bg.extend(rename_symbols(ax, _copy_map(sys, i)) for i in range(j + 1))
            else:
                bg.append(ax)
        assumptions = []
        for g in problem.assumptions:
            syms = {a.fn for a in L.formula_apps(L.encode_predicates(g))}
            if syms & state:
                assumptions.extend(rename_symbols(g, _copy_map(sys, i)) for i in range(j + 1))
            else:
                assumptions.append(g)
        out.append(VC(f"depth {j}", L.conj(*parts), plan, tuple(assumptions), tuple(bg), kind="bmc"))
    return out


def bmc(problem: Problem, k: int, options: Options | None = None) -> VerificationResult:
    """Bounded model check up to depth ``k``; stops at the shortest violation."""
    options = options or Options()
    results = []
    for vc in bmc_vcs(problem, k):
        r = solve_vc(vc, problem, options)
        results.append(r)
        if r.status == FAILS:
            break
    return VerificationResult(aggregate(results), results, detect_case(problem))


# --------------------------------------------------------------------------
# synthesis


def synthesize_constraint(problem: Problem, options: Options | None = None, *, vc: str | None = None,
                          trace=None, extra_terms=()):
    """Constraint on the parameters under which every VC becomes valid."""
    from .symelim import synthesize_vcs

    vcs = select_vcs(system_vcs(problem), vc)
    return synthesize_vcs(vcs, problem, options, trace=trace, extra_terms=extra_terms)
