"""Problem files: grammar, elaboration into logic objects, pretty-printing.

Diagnostics are raised as :class:`ProblemError` carrying ``line`` and
``column``; ``str(err)`` renders as ``file:line:col: message``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from lark import Lark, Token, Tree
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from . import logic as L

GRAMMAR = r"""
start: item*

?item: sorts_decl | functions_decl | params_decl | level_decl | system_decl
     | invariant_decl | violation_decl | assume_decl | case_decl | points_decl | theory_decl

sorts_decl: "sorts" name_list ";"
functions_decl: "functions" "{" fun_decl* "}"
fun_decl: name_list ":" fsig ";"
fsig: NAME                              -> sig_const
    | NAME ("," NAME)* "->" NAME        -> sig_fun
params_decl: "params" name_list ";"
level_decl: "level" INT "{" level_item* "}"
?level_item: "symbols" name_list ";"     -> lv_symbols
    | "certificate" NAME WAIVE? ";"      -> lv_cert
    | formula ";"                        -> lv_clause
WAIVE: "waive"

system_decl: "system" "transition" "{" trans_item* "}"           -> sys_transition
    | "system" "hybrid" NAME? "{" hyb_item* "}"                   -> sys_hybrid
    | "system" "family" "{" fam_item* "}"                         -> sys_family
    | "system" "none" "{" "}"                                     -> sys_none
?trans_item: "vars" name_list ";"        -> tr_vars
    | "funs" name_list ";"               -> tr_funs
    | "init" formula ";"                 -> tr_init
    | "update" NAME ":" formula ";"      -> tr_update
?hyb_item: "vars" name_list ";"          -> hy_vars
    | "mode" NAME "{" mode_item* "}"     -> hy_mode
    | "edge" NAME "->" NAME ["as" NAME] "{" edge_item* "}" -> hy_edge
?mode_item: "inv" formula ";"            -> md_inv
    | "flow" formula ";"                 -> md_flow
    | "init" formula ";"                 -> md_init
?edge_item: "guard" formula ";"          -> ed_guard
    | "jump" formula ";"                 -> ed_jump
?fam_item: "index" NAME ";"              -> fm_index
    | "vars" name_list ";"               -> fm_vars
    | "flow" formula ";"                 -> fm_flow

invariant_decl: "invariant" formula ";"
violation_decl: "violation" formula ";"
assume_decl: "assume" formula ";"
case_decl: "case" INT ";"
points_decl: "points" name_list ";"
theory_decl: "theory" NAME ";"

name_list: NAME ("," NAME)*

# A quantifier body extends as far to the right as possible: the "_o"
# (open) forms may end in a quantifier, the "_c" (closed) forms may not.
?formula: iff_o
?iff_o: imp_c "<->" imp_o                -> iff
    | imp_o
?imp_o: disj_c "->" imp_o                -> imp
    | disj_o
?disj_o: disj_c "|" conj_o               -> disj
    | conj_o
?conj_o: conj_c "&" neg_o                -> conj
    | neg_o
?neg_o: "!" neg_o                        -> f_not
    | quant
    | atomf
?imp_c: disj_c "->" imp_c                -> imp
    | disj_c
?disj_c: disj_c "|" conj_c               -> disj
    | conj_c
?conj_c: conj_c "&" neg_c                -> conj
    | neg_c
?neg_c: "!" neg_c                        -> f_not
    | atomf
?atomf: "true"                           -> f_true
    | "false"                            -> f_false
    | comparison
    | "(" formula ")"
    | app                                -> f_pred
quant: QUANT binder ("," binder)* "." formula
binder: NAME ":" NAME
QUANT: "forall" | "exists"

comparison: expr (RELOP expr)+
RELOP: "<=" | ">=" | "!=" | "<" | ">" | "="

?expr: expr "+" term                     -> add
    | expr "-" term                      -> sub
    | term
?term: term "*" factor                   -> mul
    | term "/" factor                    -> div
    | factor
?factor: "-" factor                      -> neg_e
    | NUMBER                             -> num
    | app
    | "(" expr ")"
app: NAME ("(" expr ("," expr)* ")")?

NAME: /(?!(forall|exists|true|false)\b)[A-Za-z_][A-Za-z0-9_]*'*/
NUMBER: /\d+(\.\d+)?/
INT: /\d+/
COMMENT: /#[^\n]*/
%import common.WS
%ignore WS
%ignore COMMENT
"""

_PARSER = Lark(GRAMMAR, parser="earley", propagate_positions=True, ambiguity="resolve")

HYBRID_KINDS = ("lha", "plha", "pha")
TIME = "t"  # current time inside hybrid blocks
DOT = "dot"  # derivative marker inside hybrid flows
DT = "dt"  # elapsed time inside family flows


class ProblemError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0, filename: str = "<input>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column
        self.filename = filename

    def __str__(self) -> str:
        return f"{self.filename}:{self.line}:{self.column}: {self.message}"


# --------------------------------------------------------------------------
# problem objects


@dataclass(frozen=True)
class LevelDecl:
    level: int
    clauses: tuple
    certificate: str = "free"
    waived: bool = False
    symbols: tuple | None = None


@dataclass(frozen=True)
class TransitionSystem:
    vars: tuple = ()
    funs: tuple = ()
    init: L.Formula = L.TRUE
    updates: tuple = ()  # (name, formula)


@dataclass(frozen=True)
class Mode:
    name: str
    inv: L.Formula = L.TRUE
    flow: L.Formula = L.TRUE
    init: L.Formula = L.FALSE


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    name: str
    guard: L.Formula = L.TRUE
    jump: L.Formula = L.TRUE


@dataclass(frozen=True)
class HybridAutomaton:
    kind: str = "lha"
    vars: tuple = ()
    modes: tuple = ()
    edges: tuple = ()

    def mode(self, name: str) -> Mode:
        for m in self.modes:
            if m.name == name:
                return m
        raise KeyError(name)


@dataclass(frozen=True)
class FamilySystem:
    index: str = "i"
    vars: tuple = ()
    flow: L.Formula = L.TRUE


@dataclass
class Problem:
    signature: L.Signature
    params: tuple = ()
    levels: tuple = ()
    system: object = None
    invariant: L.Formula = L.TRUE
    violation: L.Formula | None = None
    assumptions: tuple = ()
    case: int | None = None
    points: tuple = ()
    theory: str | None = None

    @property
    def system_kind(self) -> str:
        if self.system is None:
            return "none"
        if isinstance(self.system, TransitionSystem):
            return "transition"
        if isinstance(self.system, HybridAutomaton):
            return "hybrid"
        return "family"

    @property
    def base_theory(self) -> str:
        if self.theory:
            return self.theory
        mixed = any(s == L.INT for d in self.signature.functions.values() for s in d.arg_sorts + (d.result,))
        return "mixed" if mixed else "lra"

    def __eq__(self, other):
        if not isinstance(other, Problem):
            return NotImplemented
        return (self.signature == other.signature and self.params == other.params
                and self.levels == other.levels and self.system == other.system
                and self.invariant == other.invariant and self.violation == other.violation
                and self.assumptions == other.assumptions and self.case == other.case
                and self.points == other.points and self.theory == other.theory)


# --------------------------------------------------------------------------
# elaboration


def _pos(node):
    meta = getattr(node, "meta", None)
    if meta is not None and not getattr(meta, "empty", True):
        return meta.line, meta.column
    if isinstance(node, Token):
        return node.line, node.column
    return 0, 0


class _Elab:
    def __init__(self, filename: str):
        self.filename = filename
        self.sig = L.Signature.empty()
        self.params: list = []
        self.levels: list = []
        self.system = None
        self.invariant = None
        self.violation = None
        self.assumptions: list = []
        self.case = None
        self.points: tuple = ()
        self.theory = None
        self.hybrid = False
        self.family = False
        self.state_vars: set = set()
        self.family_vars: set = set()

    def error(self, node, msg):
        line, col = _pos(node)
        raise ProblemError(msg, line, col, self.filename)

    # declarations ---------------------------------------------------------
    def sort(self, tok) -> L.Sort:
        s = self.sig.sorts.get(str(tok))
        if s is None:
            self.error(tok, f"unknown sort {tok}")
        return s

    def names(self, node) -> list:
        return [str(t) for t in node.children]

    def run(self, tree: Tree) -> Problem:
        for item in tree.children:
            getattr(self, "do_" + item.data)(item)
        if self.invariant is None:
            self.invariant = L.TRUE
        for p in self.params:
            if p not in self.sig.functions:
                raise ProblemError(f"parameter {p} is not declared", 0, 0, self.filename)
        return Problem(self.sig, tuple(self.params), tuple(self.levels), self.system, self.invariant,
                       self.violation, tuple(self.assumptions), self.case, self.points, self.theory)

    def do_sorts_decl(self, node):
        for n in node.children[0].children:
            if str(n) in self.sig.sorts:
                self.error(n, f"sort {n} already declared")
            self.sig.sorts[str(n)] = L.Sort(str(n))

    def do_functions_decl(self, node):
        for fd in node.children:
            names_node, sig = fd.children
            if sig.data == "sig_const":
                args, res = (), sig.children[0]
            else:
                args, res = sig.children[:-1], sig.children[-1]
            arg_sorts = tuple(self.sort(a) for a in args)
            for n in names_node.children:
                name = str(n)
                if name in self.sig.functions or name in self.sig.predicates:
                    self.error(n, f"symbol {name} already declared")
                if name.endswith("'"):
                    self.error(n, f"declared symbol {name} may not be primed")
                if str(res) == "bool":
                    self.sig.predicates[name] = arg_sorts
                else:
                    self.sig.functions[name] = L.FunDecl(name, arg_sorts, self.sort(res))

    def do_params_decl(self, node):
        for n in node.children[0].children:
            if str(n) not in self.sig.functions:
                self.error(n, f"parameter {n} is not declared")
            self.params.append(str(n))

    def do_level_decl(self, node):
        num = int(node.children[0])
        clauses, cert, waived, symbols = [], None, False, None
        for it in node.children[1:]:
            if it.data == "lv_symbols":
                symbols = tuple(self.names(it.children[0]))
                for s in symbols:
                    if s not in self.sig.functions:
                        self.error(it, f"unknown symbol {s}")
            elif it.data == "lv_cert":
                cert = str(it.children[0])
                waived = len(it.children) > 1
                from .locality import LONG_NAMES

                if cert not in LONG_NAMES and cert not in LONG_NAMES.values():
                    self.error(it, f"unknown certificate {cert}")
            else:
                clauses.append(self.formula(it.children[0], {}))
        if any(l.level == num for l in self.levels):
            self.error(node, f"level {num} declared twice")
        self.levels.append(LevelDecl(num, tuple(clauses), cert or "free", waived, symbols))

    def do_sys_transition(self, node):
        vars_, funs, init, updates = (), (), L.TRUE, []
        for it in node.children:
            if it.data == "tr_vars":
                vars_ = tuple(self.names(it.children[0]))
                self._check_declared(it, vars_)
            elif it.data == "tr_funs":
                funs = tuple(self.names(it.children[0]))
                self._check_declared(it, funs)
        self.state_vars = set(vars_) | set(funs)
        for it in node.children:
            if it.data == "tr_init":
                init = self.formula(it.children[0], {})
            elif it.data == "tr_update":
                name = str(it.children[0])
                if any(n == name for n, _ in updates):
                    self.error(it, f"update {name} defined twice")
                updates.append((name, self.formula(it.children[1], {}, primes=True)))
        self.system = TransitionSystem(vars_, funs, init, tuple(updates))

    def _check_declared(self, node, names):
        for n in names:
            if n not in self.sig.functions:
                self.error(node, f"unknown symbol {n}")

    def do_sys_hybrid(self, node):
        kids = list(node.children)
        kind = "lha"
        if kids and isinstance(kids[0], Token):
            kind = str(kids.pop(0))
            if kind not in HYBRID_KINDS:
                self.error(node, f"unknown hybrid kind {kind}")
        if TIME in self.sig.functions:
            self.error(node, f"symbol {TIME} is reserved for time in hybrid systems")
        self.hybrid = True
        vars_, modes, edges = (), [], []
        for it in kids:
            if it.data == "hy_vars":
                vars_ = tuple(self.names(it.children[0]))
                self._check_declared(it, vars_)
                for v in vars_:
                    if self.sig.functions[v].arity:
                        self.error(it, f"continuous variable {v} must be declared as a constant")
        self.state_vars = set(vars_)
        for it in kids:
            if it.data == "hy_mode":
                name = str(it.children[0])
                inv, flow, init = L.TRUE, L.TRUE, L.FALSE
                for m in it.children[1:]:
                    f = self.formula(m.children[0], {}, flows=(m.data == "md_flow"))
                    if m.data == "md_inv":
                        inv = f
                    elif m.data == "md_flow":
                        flow = f
                    else:
                        init = f
                if any(md.name == name for md in modes):
                    self.error(it, f"mode {name} defined twice")
                modes.append(Mode(name, inv, flow, init))
            elif it.data == "hy_edge":
                src, dst = str(it.children[0]), str(it.children[1])
                label = it.children[2]
                name = str(label) if label is not None else f"{src}->{dst}"
                guard, jump = L.TRUE, L.TRUE
                for e in it.children[3:]:
                    if e.data == "ed_guard":
                        guard = self.formula(e.children[0], {})
                    else:
                        jump = self.formula(e.children[0], {}, primes=True)
                edges.append(Edge(src, dst, name, guard, jump))
        names = {m.name for m in modes}
        for e in edges:
            if e.src not in names or e.dst not in names:
                self.error(node, f"edge {e.name} refers to an unknown mode")
        self.system = HybridAutomaton(kind, vars_, tuple(modes), tuple(edges))

    def do_sys_family(self, node):
        index, vars_, flow = "i", (), L.TRUE
        self.family = True
        for it in node.children:
            if it.data == "fm_index":
                index = str(it.children[0])
            elif it.data == "fm_vars":
                vars_ = tuple(self.names(it.children[0]))
                self._check_declared(it, vars_)
        self.family_vars = set(vars_)
        self.state_vars = set(vars_)
        for it in node.children:
            if it.data == "fm_flow":
                flow = self.formula(it.children[0], {}, primes=True)
        self.system = FamilySystem(index, vars_, flow)

    def do_sys_none(self, node):
        self.system = None

    def do_invariant_decl(self, node):
        if self.invariant is not None:
            self.error(node, "invariant given twice")
        self.invariant = self.formula(node.children[0], {})

    def do_violation_decl(self, node):
        self.violation = self.formula(node.children[0], {})

    def do_assume_decl(self, node):
        self.assumptions.append(self.formula(node.children[0], {}))

    def do_case_decl(self, node):
        c = int(node.children[0])
        if c not in (1, 2, 3):
            self.error(node, "case must be 1, 2 or 3")
        self.case = c

    def do_points_decl(self, node):
        self.points = tuple(self.names(node.children[0]))

    def do_theory_decl(self, node):
        t = str(node.children[0])
        if t not in ("lra", "mixed"):
            self.error(node, f"unknown theory {t}")
        self.theory = t

    # formulas -------------------------------------------------------------
    def formula(self, node, env: dict, primes: bool = False, flows: bool = False) -> L.Formula:
        self._primes = primes
        self._flows = flows
        return self._f(node, env)

    def _f(self, node, env) -> L.Formula:
        if isinstance(node, Token):
            self.error(node, f"unexpected token {node}")
        d = node.data
        if d == "iff":
            return L.Iff(self._f(node.children[0], env), self._f(node.children[1], env))
        if d == "imp":
            return L.Implies(self._f(node.children[0], env), self._f(node.children[1], env))
        if d == "disj":
            return L.Or(tuple(self._f(c, env) for c in node.children))
        if d == "conj":
            return L.And(tuple(self._f(c, env) for c in node.children))
        if d == "f_not":
            return L.Not(self._f(node.children[0], env))
        if d == "f_true":
            return L.TRUE
        if d == "f_false":
            return L.FALSE
        if d == "quant":
            q = str(node.children[0])
            binders = node.children[1:-1]
            env2 = dict(env)
            vs = []
            for b in binders:
                name, sname = str(b.children[0]), b.children[1]
                if name in self.sig.functions:
                    self.error(b, f"bound variable {name} shadows a declared symbol")
                v = L.Var(name, self.sort(sname))
                env2[name] = v
                vs.append(v)
            body = self._f(node.children[-1], env2)
            return (L.Forall if q == "forall" else L.Exists)(tuple(vs), body)
        if d == "comparison":
            kids = node.children
            parts = []
            lhs = self._e(kids[0], env)
            for i in range(1, len(kids), 2):
                op = str(kids[i])
                rhs = self._e(kids[i + 1], env)
                parts.append(self._rel(op, lhs, rhs, node))
                lhs = rhs
            return parts[0] if len(parts) == 1 else L.And(tuple(parts))
        if d == "f_pred":
            app = node.children[0]
            name = str(app.children[0])
            if name not in self.sig.predicates:
                self.error(app, f"unknown predicate {name}")
            args = tuple(self._e(a, env) for a in app.children[1:])
            if len(args) != len(self.sig.predicates[name]):
                self.error(app, f"predicate {name} expects {len(self.sig.predicates[name])} argument(s)")
            atom = L.PredAtom(name, tuple(L._canon_arg(a) for a in args))
            if not L.well_sorted(atom, self.sig):
                self.error(app, f"sort clash in {name}(...)")
            return atom
        self.error(node, f"unexpected {d}")

    def _rel(self, op, lhs, rhs, node) -> L.Formula:
        if op not in ("=", "!="):
            for t in (lhs, rhs):
                if isinstance(t, (L.Var, L.App)) and not t.sort.numeric:
                    self.error(node, "ordering on an uninterpreted sort")
        return _RawRel(op, L.as_poly(lhs), L.as_poly(rhs))

    def _e(self, node, env) -> L.Term:
        if isinstance(node, Token):
            self.error(node, f"unexpected token {node}")
        d = node.data
        if d == "num":
            return L.Poly.const(Fraction(str(node.children[0])))
        if d in ("add", "sub", "mul"):
            a = self._e(node.children[0], env)
            b = self._e(node.children[1], env)
            self._numeric(a, node)
            self._numeric(b, node)
            a, b = L.as_poly(a), L.as_poly(b)
            return a + b if d == "add" else a - b if d == "sub" else a * b
        if d == "div":
            a = L.as_poly(self._e(node.children[0], env))
            b = L.as_poly(self._e(node.children[1], env))
            if not b.is_const() or b.const_value() == 0:
                self.error(node, "division only by non-zero numerals")
            return a.scale(1 / b.const_value())
        if d == "neg_e":
            a = self._e(node.children[0], env)
            self._numeric(a, node)
            return -L.as_poly(a)
        if d == "app":
            return self._app(node, env)
        self.error(node, f"unexpected {d}")

    def _numeric(self, t, node):
        if isinstance(t, (L.Var, L.App)) and not t.sort.numeric:
            self.error(node, "arithmetic on an uninterpreted sort")

    def _app(self, node, env) -> L.Term:
        tok = node.children[0]
        name = str(tok)
        args = [self._e(a, env) for a in node.children[1:]]
        if not args and name in env:
            return env[name]
        base = name.rstrip("'")
        primed = base != name
        if self.hybrid and name == TIME and not args:
            return L.App(TIME, (), L.REAL)
        if self.hybrid and self._flows and name == DOT:
            if len(args) != 1:
                self.error(tok, "dot expects one continuous variable")
            u = L.unwrap(args[0])
            if not (isinstance(u, L.App) and not u.args and u.fn in self.state_vars):
                self.error(tok, "dot applies to a continuous variable")
            return L.App(DOT, (u,), L.REAL)
        if self.family and self._primes and name == DT:
            return L.App(DT, (), L.REAL)
        decl = self.sig.functions.get(base)
        if decl is None:
            if base in self.sig.predicates:
                self.error(tok, f"predicate {base} used as a term")
            self.error(tok, f"undeclared symbol {name}")
        if primed:
            if not self._primes:
                self.error(tok, f"primed symbol {name} outside an update")
            if base not in self.state_vars or len(name) - len(base) > 1:
                self.error(tok, f"{name}: only state symbols may be primed once")
        if len(args) != decl.arity:
            self.error(tok, f"{base} expects {decl.arity} argument(s), got {len(args)}")
        t = L.App(name, args, decl.result)
        for s, a in zip(decl.arg_sorts, t.args):
            if not L._compatible(s, a):
                self.error(tok, f"sort clash: argument of {base} should be {s.name}")
        return t


class _RawRel(L.Formula):
    """Relation as written; normalised when the tree is finalised."""

    def __init__(self, op, lhs, rhs):
        self.op, self.lhs, self.rhs = op, lhs, rhs


def _finalise(phi: L.Formula) -> L.Formula:
    if isinstance(phi, _RawRel):
        return L.rel(phi.op, phi.lhs, phi.rhs)
    if isinstance(phi, L.Not):
        return L.Not(_finalise(phi.arg))
    if isinstance(phi, L.And):
        return L.conj(*[_finalise(a) for a in phi.args])
    if isinstance(phi, L.Or):
        return L.disj(*[_finalise(a) for a in phi.args])
    if isinstance(phi, L.Implies):
        return L.Implies(_finalise(phi.lhs), _finalise(phi.rhs))
    if isinstance(phi, L.Iff):
        return L.Iff(_finalise(phi.lhs), _finalise(phi.rhs))
    if isinstance(phi, (L.Forall, L.Exists)):
        return type(phi)(phi.vars, _finalise(phi.body))
    return phi


def _fin_all(p: Problem) -> Problem:
    f = _finalise
    levels = tuple(replace(l, clauses=tuple(f(c) for c in l.clauses)) for l in p.levels)
    sys = p.system
    if isinstance(sys, TransitionSystem):
        sys = TransitionSystem(sys.vars, sys.funs, f(sys.init), tuple((n, f(u)) for n, u in sys.updates))
    elif isinstance(sys, HybridAutomaton):
        sys = HybridAutomaton(sys.kind, sys.vars,
                              tuple(Mode(m.name, f(m.inv), f(m.flow), f(m.init)) for m in sys.modes),
                              tuple(Edge(e.src, e.dst, e.name, f(e.guard), f(e.jump)) for e in sys.edges))
    elif isinstance(sys, FamilySystem):
        sys = FamilySystem(sys.index, sys.vars, f(sys.flow))
    return Problem(p.signature, p.params, levels, sys, f(p.invariant),
                   None if p.violation is None else f(p.violation),
                   tuple(f(a) for a in p.assumptions), p.case, p.points, p.theory)


def parse_problem(text: str, filename: str = "<input>") -> Problem:
    """Parse and elaborate a problem file."""
    try:
        tree = _PARSER.parse(text)
    except UnexpectedCharacters as e:
        raise ProblemError(f"unexpected character {text[e.pos_in_stream]!r}" if e.pos_in_stream is not None
                           and e.pos_in_stream < len(text) else "unexpected character", e.line, e.column, filename)
    except UnexpectedEOF as e:
        raise ProblemError("unexpected end of input", getattr(e, "line", 0) or 0, getattr(e, "column", 0) or 0,
                           filename)
    except UnexpectedToken as e:
        exp = ", ".join(sorted(e.expected)[:6]) if e.expected else ""
        raise ProblemError(f"unexpected {e.token!s}" + (f" (expected {exp})" if exp else ""), e.line, e.column,
                           filename)
    except UnexpectedInput as e:  # pragma: no cover
        raise ProblemError("syntax error", getattr(e, "line", 0), getattr(e, "column", 0), filename)
    return _fin_all(_Elab(filename).run(tree))


def load_problem(path) -> Problem:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ProblemError(f"not valid UTF-8: {e.reason}", 1, 1, str(path))
    return parse_problem(text, str(path))


# --------------------------------------------------------------------------
# printing


def _sig_text(sig: L.Signature) -> list:
    lines = []
    user_sorts = [s for s in sig.sorts if s not in ("real", "int")]
    if user_sorts:
        lines.append(f"sorts {', '.join(user_sorts)};")
    if sig.functions or sig.predicates:
        lines.append("functions {")
        for d in sig.functions.values():
            if d.arg_sorts:
                lines.append(f"  {d.name} : {', '.join(s.name for s in d.arg_sorts)} -> {d.result.name};")
            else:
                lines.append(f"  {d.name} : {d.result.name};")
        for name, args in sig.predicates.items():
            if args:
                lines.append(f"  {name} : {', '.join(s.name for s in args)} -> bool;")
            else:
                lines.append(f"  {name} : bool;")
        lines.append("}")
    return lines


def pretty_print(p: Problem) -> str:
    fmt = L.format_formula
    out = _sig_text(p.signature)
    if p.theory:
        out.append(f"theory {p.theory};")
    if p.params:
        out.append(f"params {', '.join(p.params)};")
    for lv in p.levels:
        out.append(f"level {lv.level} {{")
        if lv.symbols is not None:
            out.append(f"  symbols {', '.join(lv.symbols)};")
        for c in lv.clauses:
            out.append(f"  {fmt(c)};")
        out.append(f"  certificate {lv.certificate}{' waive' if lv.waived else ''};")
        out.append("}")
    s = p.system
    if isinstance(s, TransitionSystem):
        out.append("system transition {")
        if s.vars:
            out.append(f"  vars {', '.join(s.vars)};")
        if s.funs:
            out.append(f"  funs {', '.join(s.funs)};")
        out.append(f"  init {fmt(s.init)};")
        for n, u in s.updates:
            out.append(f"  update {n}: {fmt(u)};")
        out.append("}")
    elif isinstance(s, HybridAutomaton):
        out.append(f"system hybrid {s.kind} {{")
        if s.vars:
            out.append(f"  vars {', '.join(s.vars)};")
        for m in s.modes:
            out.append(f"  mode {m.name} {{ inv {fmt(m.inv)}; flow {fmt(m.flow)}; init {fmt(m.init)}; }}")
        for e in s.edges:
            label = f" as {e.name}" if e.name != f"{e.src}->{e.dst}" else ""
            out.append(f"  edge {e.src} -> {e.dst}{label} {{ guard {fmt(e.guard)}; jump {fmt(e.jump)}; }}")
        out.append("}")
    elif isinstance(s, FamilySystem):
        out.append("system family {")
        out.append(f"  index {s.index};")
        if s.vars:
            out.append(f"  vars {', '.join(s.vars)};")
        out.append(f"  flow {fmt(s.flow)};")
        out.append("}")
    out.append(f"invariant {fmt(p.invariant)};")
    if p.violation is not None:
        out.append(f"violation {fmt(p.violation)};")
    for a in p.assumptions:
        out.append(f"assume {fmt(a)};")
    if p.case is not None:
        out.append(f"case {p.case};")
    if p.points:
        out.append(f"points {', '.join(p.points)};")
    return "\n".join(out) + "\n"
