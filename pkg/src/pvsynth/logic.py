"""Many-sorted terms, formulas and clauses.

Arithmetic terms are kept in a canonical polynomial form: a sum of
``coefficient * monomial`` where a monomial is a sorted tuple of
``(atom, power)`` pairs and an atom is a variable or an application of a
non-arithmetic symbol.  Coefficients are exact ``Fraction`` values, so two
terms that are equal as polynomials are equal as Python objects.

Relational atoms are stored as ``poly op 0`` with ``op`` one of ``<=``,
``<`` and ``=``, scaled so that the leading coefficient is 1 (for ``=``) or
has absolute value 1 (for inequalities).  Negation never needs a ``Not``
node: the inequality ops are closed under complement and a disequality
becomes the clause ``t < s | t > s``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence


class SortError(ValueError):
    pass


class NestedSkolemError(ValueError):
    """An existential sits below a universal; a Skolem function would be needed."""


class BlowupError(RuntimeError):
    """A normal-form conversion exceeded its configured size limit."""


# --------------------------------------------------------------------------
# sorts


@dataclass(frozen=True)
class Sort:
    name: str
    kind: str = "uninterpreted"  # real | int | uninterpreted

    @property
    def numeric(self) -> bool:
        return self.kind in ("real", "int")

    def __repr__(self) -> str:
        return self.name


REAL = Sort("real", "real")
INT = Sort("int", "int")


# --------------------------------------------------------------------------
# terms


class Term:
    __slots__ = ("_hash", "_key")

    def key(self) -> tuple:
        k = self._key
        if k is None:
            k = self._key = self._make_key()
        return k

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = self._hash = hash(self.key())
        return h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(other) is not type(self):
            return False
        return self.key() == other.key()

    def __lt__(self, other: "Term") -> bool:
        return self.key() < other.key()

    def __repr__(self) -> str:
        return format_term(self)


class Var(Term):
    __slots__ = ("name", "sort")

    def __init__(self, name: str, sort: Sort = REAL):
        self.name = name
        self.sort = sort
        self._hash = None
        self._key = None

    def _make_key(self):
        return (0, self.name, self.sort.name)

    def __reduce__(self):
        return (Var, (self.name, self.sort))


class App(Term):
    """Application ``fn(args)``; constants are applications with no arguments."""

    __slots__ = ("fn", "args", "sort")

    def __init__(self, fn: str, args: Sequence[Term] = (), sort: Sort = REAL):
        self.fn = fn
        self.args = tuple(_canon_arg(a) for a in args)
        self.sort = sort
        self._hash = None
        self._key = None

    def _make_key(self):
        return (1, self.fn, tuple(a.key() for a in self.args))

    def __reduce__(self):
        return (App, (self.fn, self.args, self.sort))

    @property
    def is_constant(self) -> bool:
        return not self.args


Atom = Var | App
Monomial = tuple  # tuple[tuple[Atom, int], ...]


def _mono_key(m: Monomial) -> tuple:
    return tuple((a.key(), e) for a, e in m)


def _term_order(item) -> tuple:
    m = item[0]
    return (len(m) == 0, _mono_key(m))


class Poly(Term):
    """Canonical polynomial: tuple of ``(monomial, coefficient)``, constant last."""

    __slots__ = ("terms", "_dict")

    def __init__(self, terms: Iterable = ()):
        items = [(m, Fraction(c)) for m, c in terms if c != 0]
        items.sort(key=_term_order)
        self.terms = tuple(items)
        self._hash = None
        self._key = None
        self._dict = None

    def __reduce__(self):
        return (Poly, (self.terms,))

    def _make_key(self):
        return (2, tuple((_mono_key(m), c) for m, c in self.terms))

    # construction ----------------------------------------------------------
    @staticmethod
    def const(q) -> "Poly":
        return Poly([((), Fraction(q))])

    @staticmethod
    def atom(t: Term) -> "Poly":
        if isinstance(t, Poly):
            return t
        return Poly([(((t, 1),), Fraction(1))])

    @staticmethod
    def from_dict(d: Mapping) -> "Poly":
        return Poly(d.items())

    def as_dict(self) -> dict:
        if self._dict is None:
            self._dict = dict(self.terms)
        return self._dict

    # queries ---------------------------------------------------------------
    def is_const(self) -> bool:
        return all(not m for m, _ in self.terms)

    def const_value(self) -> Fraction:
        return self.as_dict().get((), Fraction(0))

    def without_const(self) -> "Poly":
        return Poly((m, c) for m, c in self.terms if m)

    def atoms(self) -> set:
        out = set()
        for m, _ in self.terms:
            for a, _e in m:
                out.add(a)
        return out

    def single_atom(self):
        """Return the atom if this polynomial is exactly ``1*atom``."""
        if len(self.terms) == 1:
            m, c = self.terms[0]
            if c == 1 and len(m) == 1 and m[0][1] == 1:
                return m[0][0]
        return None

    def is_linear(self) -> bool:
        return all(len(m) <= 1 and all(e == 1 for _, e in m) for m, _ in self.terms)

    def degree_in(self, a) -> int:
        d = 0
        for m, _ in self.terms:
            for x, e in m:
                if x == a:
                    d = max(d, e)
        return d

    def split(self, a) -> tuple["Poly", "Poly"]:
        """Write ``self = coef * a + rest``; requires degree in ``a`` at most 1."""
        coef, rest = {}, {}
        for m, c in self.terms:
            hit = [i for i, (x, _) in enumerate(m) if x == a]
            if not hit:
                rest[m] = rest.get(m, 0) + c
                continue
            i = hit[0]
            if m[i][1] != 1:
                raise ValueError(f"{format_term(a)} occurs non-linearly")
            m2 = m[:i] + m[i + 1:]
            coef[m2] = coef.get(m2, 0) + c
        return Poly.from_dict(coef), Poly.from_dict(rest)

    def leading_coeff(self) -> Fraction:
        for m, c in self.terms:
            if m:
                return c
        return self.const_value()

    def sort_of(self) -> Sort:
        ints = all(a.sort.kind == "int" for a in self.atoms())
        if ints and all(c.denominator == 1 for _, c in self.terms):
            return INT
        return REAL

    # arithmetic ------------------------------------------------------------
    def __add__(self, other) -> "Poly":
        other = as_poly(other)
        d = dict(self.as_dict())
        for m, c in other.terms:
            d[m] = d.get(m, 0) + c
        return Poly.from_dict(d)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly((m, -c) for m, c in self.terms)

    def __sub__(self, other) -> "Poly":
        return self + (-as_poly(other))

    def __rsub__(self, other) -> "Poly":
        return as_poly(other) - self

    def __mul__(self, other) -> "Poly":
        other = as_poly(other)
        d: dict = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                m = _mono_mul(m1, m2)
                d[m] = d.get(m, 0) + c1 * c2
        return Poly.from_dict(d)

    __rmul__ = __mul__

    def scale(self, q) -> "Poly":
        q = Fraction(q)
        return Poly((m, c * q) for m, c in self.terms)

    def evaluate(self, env: Mapping) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms:
            v = c
            for a, e in m:
                v *= env[a] ** e
            total += v
        return total


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    d: dict = {}
    for a, e in itertools.chain(m1, m2):
        d[a] = d.get(a, 0) + e
    return tuple(sorted(d.items(), key=lambda ae: ae[0].key()))


def as_poly(t) -> Poly:
    if isinstance(t, Poly):
        return t
    if isinstance(t, (int, Fraction)):
        return Poly.const(t)
    if isinstance(t, (Var, App)):
        return Poly.atom(t)
    raise TypeError(f"not a term: {t!r}")


def _canon_arg(t: Term) -> Term:
    if isinstance(t, (int, Fraction)):
        return Poly.const(t)
    if isinstance(t, (Var, App)) and t.sort.numeric:
        return Poly.atom(t)
    return t


def const(name: str, sort: Sort = REAL) -> App:
    return App(name, (), sort)


def term_sort(t: Term) -> Sort:
    if isinstance(t, Poly):
        a = t.single_atom()
        if a is not None:
            return a.sort
        return t.sort_of()
    return t.sort


def unwrap(t: Term) -> Term:
    """Strip a ``1*atom`` polynomial wrapper."""
    if isinstance(t, Poly):
        a = t.single_atom()
        if a is not None:
            return a
    return t


def map_term(t: Term, fn: Callable[[Term], Term | None]) -> Term:
    """Rebuild ``t`` bottom-up, replacing each atom ``a`` by ``fn(a)`` when not None."""
    if isinstance(t, Var):
        r = fn(t)
        return t if r is None else r
    if isinstance(t, App):
        if t.args:
            new_args = tuple(map_term(a, fn) for a in t.args)
            node = t if new_args == t.args else App(t.fn, new_args, t.sort)
        else:
            node = t
        r = fn(node)
        return node if r is None else r
    if isinstance(t, Poly):
        changed = False
        acc = Poly()
        parts = []
        for m, c in t.terms:
            prod = Poly.const(c)
            for a, e in m:
                na = map_term(a, fn)
                if na is not a and na != a:
                    changed = True
                pa = as_poly(na)
                for _ in range(e):
                    prod = prod * pa
            parts.append(prod)
        if not changed:
            return t
        for p in parts:
            acc = acc + p
        return acc
    raise TypeError(t)


def subterms(t: Term) -> Iterator[Term]:
    """All atoms and applications occurring in ``t`` (post-order)."""
    if isinstance(t, Var):
        yield t
    elif isinstance(t, App):
        for a in t.args:
            yield from subterms(a)
        yield t
    elif isinstance(t, Poly):
        for m, _ in t.terms:
            for a, _e in m:
                yield from subterms(a)


def term_vars(t: Term) -> set:
    return {s for s in subterms(t) if isinstance(s, Var)}


def is_ground_term(t: Term) -> bool:
    return not term_vars(t)


# --------------------------------------------------------------------------
# formulas


class Formula:
    def __and__(self, other):
        return conj(self, other)

    def __or__(self, other):
        return disj(self, other)

    def __invert__(self):
        return Not(self)

    def __repr__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True, repr=False)
class BoolConst(Formula):
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)

REL_OPS = ("<=", "<", "=")


class Rel(Formula):
    """``poly op 0`` in normal form.  Build with :func:`rel`."""

    __slots__ = ("op", "poly", "_hash", "_neg")

    def __init__(self, op: str, poly: Poly):
        self.op = op
        self.poly = poly
        self._hash = None
        self._neg = None

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.op, self.poly))
        return self._hash

    def __eq__(self, other):
        return isinstance(other, Rel) and self.op == other.op and self.poly == other.poly

    def __lt__(self, other):
        return (self.poly.key(), self.op) < (other.poly.key(), other.op)

    def __reduce__(self):
        return (Rel, (self.op, self.poly))

    def holds(self, env: Mapping) -> bool:
        v = self.poly.evaluate(env)
        return _cmp(self.op, v)

    def negate(self) -> list["Rel"]:
        """Literals whose disjunction is the complement of this atom."""
        if self._neg is None:
            if self.op == "<=":
                self._neg = (make_rel("<", -self.poly),)
            elif self.op == "<":
                self._neg = (make_rel("<=", -self.poly),)
            else:
                self._neg = (make_rel("<", self.poly), make_rel("<", -self.poly))
        return list(self._neg)

    def atoms(self) -> set:
        return self.poly.atoms()


def _cmp(op: str, v: Fraction) -> bool:
    if op == "<=":
        return v <= 0
    if op == "<":
        return v < 0
    return v == 0


def make_rel(op: str, p: Poly) -> Formula:
    """Normalise ``p op 0``; returns TRUE/FALSE for constant ``p``."""
    if p.is_const():
        return TRUE if _cmp(op, p.const_value()) else FALSE
    lead = p.leading_coeff()
    if op == "=":
        if lead != 1:
            p = p.scale(1 / lead)
    elif abs(lead) != 1:
        p = p.scale(1 / abs(lead))
    return Rel(op, p)


def rel(op: str, lhs, rhs=0) -> Formula:
    """Build ``lhs op rhs`` for ``op`` in ``<= < >= > = !=``."""
    lhs, rhs = as_poly(lhs), as_poly(rhs)
    if op == "<=":
        return make_rel("<=", lhs - rhs)
    if op == "<":
        return make_rel("<", lhs - rhs)
    if op == ">=":
        return make_rel("<=", rhs - lhs)
    if op == ">":
        return make_rel("<", rhs - lhs)
    if op == "=":
        return make_rel("=", lhs - rhs)
    if op == "!=":
        return disj(make_rel("<", lhs - rhs), make_rel("<", rhs - lhs))
    raise ValueError(op)


@dataclass(frozen=True, repr=False)
class PredAtom(Formula):
    name: str
    args: tuple


@dataclass(frozen=True, repr=False)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True, repr=False)
class And(Formula):
    args: tuple


@dataclass(frozen=True, repr=False)
class Or(Formula):
    args: tuple


@dataclass(frozen=True, repr=False)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True, repr=False)
class Iff(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True, repr=False)
class Forall(Formula):
    vars: tuple
    body: Formula


@dataclass(frozen=True, repr=False)
class Exists(Formula):
    vars: tuple
    body: Formula


def conj(*fs: Formula) -> Formula:
    out = []
    for f in fs:
        if isinstance(f, And):
            out.extend(f.args)
        elif f == TRUE:
            continue
        elif f == FALSE:
            return FALSE
        else:
            out.append(f)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*fs: Formula) -> Formula:
    out = []
    for f in fs:
        if isinstance(f, Or):
            out.extend(f.args)
        elif f == FALSE:
            continue
        elif f == TRUE:
            return TRUE
        else:
            out.append(f)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def conj_all(fs: Iterable[Formula]) -> Formula:
    return conj(*list(fs))


def disj_all(fs: Iterable[Formula]) -> Formula:
    return disj(*list(fs))


def forall(vs: Sequence[Var], body: Formula) -> Formula:
    vs = tuple(v for v in vs if v in free_vars(body))
    if not vs:
        return body
    return Forall(vs, body)


def exists(vs: Sequence[Var], body: Formula) -> Formula:
    vs = tuple(v for v in vs if v in free_vars(body))
    if not vs:
        return body
    return Exists(vs, body)


# --------------------------------------------------------------------------
# traversal helpers


def formula_terms(phi: Formula) -> Iterator[Term]:
    """Top-level terms of all atoms in ``phi``."""
    if isinstance(phi, Rel):
        yield phi.poly
    elif isinstance(phi, PredAtom):
        yield from phi.args
    elif isinstance(phi, BoolConst):
        return
    elif isinstance(phi, Not):
        yield from formula_terms(phi.arg)
    elif isinstance(phi, (And, Or)):
        for a in phi.args:
            yield from formula_terms(a)
    elif isinstance(phi, (Implies, Iff)):
        yield from formula_terms(phi.lhs)
        yield from formula_terms(phi.rhs)
    elif isinstance(phi, (Forall, Exists)):
        yield from formula_terms(phi.body)
    else:
        raise TypeError(phi)


def formula_apps(phi: Formula) -> set:
    """All application subterms (including constants) of ``phi``."""
    out = set()
    for t in formula_terms(phi):
        for s in subterms(t):
            if isinstance(s, App):
                out.add(s)
    return out


def free_vars(phi: Formula) -> set:
    if isinstance(phi, (Forall, Exists)):
        return free_vars(phi.body) - set(phi.vars)
    if isinstance(phi, (Rel, PredAtom)):
        out = set()
        for t in formula_terms(phi):
            out |= term_vars(t)
        return out
    if isinstance(phi, BoolConst):
        return set()
    if isinstance(phi, Not):
        return free_vars(phi.arg)
    if isinstance(phi, (And, Or)):
        out = set()
        for a in phi.args:
            out |= free_vars(a)
        return out
    if isinstance(phi, (Implies, Iff)):
        return free_vars(phi.lhs) | free_vars(phi.rhs)
    raise TypeError(phi)


def all_var_names(phi: Formula) -> set:
    names = set()
    for t in formula_terms(phi):
        names |= {v.name for v in term_vars(t)}
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, (Forall, Exists)):
            names |= {v.name for v in f.vars}
            stack.append(f.body)
        elif isinstance(f, Not):
            stack.append(f.arg)
        elif isinstance(f, (And, Or)):
            stack.extend(f.args)
        elif isinstance(f, (Implies, Iff)):
            stack.extend([f.lhs, f.rhs])
    return names


def map_atoms(phi: Formula, fn: Callable[[Formula], Formula]) -> Formula:
    """Apply ``fn`` to every atom (Rel / PredAtom / BoolConst) of ``phi``."""
    if isinstance(phi, (Rel, PredAtom, BoolConst)):
        return fn(phi)
    if isinstance(phi, Not):
        return Not(map_atoms(phi.arg, fn))
    if isinstance(phi, And):
        return conj(*[map_atoms(a, fn) for a in phi.args])
    if isinstance(phi, Or):
        return disj(*[map_atoms(a, fn) for a in phi.args])
    if isinstance(phi, Implies):
        return Implies(map_atoms(phi.lhs, fn), map_atoms(phi.rhs, fn))
    if isinstance(phi, Iff):
        return Iff(map_atoms(phi.lhs, fn), map_atoms(phi.rhs, fn))
    if isinstance(phi, Forall):
        return Forall(phi.vars, map_atoms(phi.body, fn))
    if isinstance(phi, Exists):
        return Exists(phi.vars, map_atoms(phi.body, fn))
    raise TypeError(phi)


def rebuild_atom(a: Formula, tfn: Callable[[Term], Term]) -> Formula:
    if isinstance(a, Rel):
        return make_rel(a.op, as_poly(tfn(a.poly)))
    if isinstance(a, PredAtom):
        return PredAtom(a.name, tuple(_canon_arg(tfn(x)) for x in a.args))
    return a


def replace_terms(phi: Formula, mapping: Mapping[Term, Term]) -> Formula:
    """Replace atoms/applications equal to a key of ``mapping`` (bottom-up)."""
    if not mapping:
        return phi
    fn = lambda s: mapping.get(s)  # noqa: E731
    return map_atoms(phi, lambda a: rebuild_atom(a, lambda t: map_term(t, fn)))


def replace_in_term(t: Term, mapping: Mapping[Term, Term]) -> Term:
    return map_term(t, lambda s: mapping.get(s))


def substitute(phi: Formula, sigma: Mapping[Var, Term]) -> Formula:
    """Capture-avoiding substitution of free variables."""
    if not sigma:
        return phi
    if isinstance(phi, (Rel, PredAtom, BoolConst)):
        return rebuild_atom(phi, lambda t: map_term(t, lambda s: sigma.get(s) if isinstance(s, Var) else None))
    if isinstance(phi, Not):
        return Not(substitute(phi.arg, sigma))
    if isinstance(phi, And):
        return conj(*[substitute(a, sigma) for a in phi.args])
    if isinstance(phi, Or):
        return disj(*[substitute(a, sigma) for a in phi.args])
    if isinstance(phi, Implies):
        return Implies(substitute(phi.lhs, sigma), substitute(phi.rhs, sigma))
    if isinstance(phi, Iff):
        return Iff(substitute(phi.lhs, sigma), substitute(phi.rhs, sigma))
    if isinstance(phi, (Forall, Exists)):
        inner = {v: t for v, t in sigma.items() if v not in phi.vars}
        if not inner:
            return phi
        range_names = set()
        for t in inner.values():
            range_names |= {v.name for v in term_vars(t)}
        new_vars = []
        ren = {}
        taken = range_names | all_var_names(phi.body)
        for v in phi.vars:
            if v.name in range_names:
                nv = Var(_fresh_name(v.name, taken), v.sort)
                taken.add(nv.name)
                ren[v] = nv
                new_vars.append(nv)
            else:
                new_vars.append(v)
        body = substitute(phi.body, ren) if ren else phi.body
        body = substitute(body, inner)
        return type(phi)(tuple(new_vars), body)
    raise TypeError(phi)


def substitute_term(t: Term, sigma: Mapping[Var, Term]) -> Term:
    return map_term(t, lambda s: sigma.get(s) if isinstance(s, Var) else None)


def _fresh_name(base: str, taken: set) -> str:
    i = 0
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


class NameSupply:
    """Deterministic fresh names: ``base_0``, ``base_1``, ... avoiding ``used``."""

    def __init__(self, used: Iterable[str] = ()):
        self.used = set(used)
        self.counters: dict[str, int] = {}

    def reserve(self, names: Iterable[str]) -> None:
        self.used.update(names)

    def fresh(self, base: str, sep: str = "_") -> str:
        n = self.counters.get(base, 0)
        while f"{base}{sep}{n}" in self.used:
            n += 1
        name = f"{base}{sep}{n}"
        self.counters[base] = n + 1
        self.used.add(name)
        return name


# --------------------------------------------------------------------------
# evaluation


def evaluate(phi: Formula, env: Mapping, domain: Mapping[str, Sequence] | None = None,
             funcs: Mapping[str, Callable] | None = None) -> bool:
    """Evaluate ``phi`` in a concrete structure.

    ``env`` maps atoms (constants, variables) to values; ``funcs`` maps a
    function name to a Python callable, used for applications not in
    ``env``; quantifiers range over ``domain[sort.name]``.
    """
    funcs = funcs or {}

    def term_val(t: Term, bind):
        if isinstance(t, Var):
            return bind[t] if t in bind else env[t]
        if isinstance(t, App):
            if not t.args and t in env:
                return env[t]
            vals = tuple(term_val(a, bind) for a in t.args)
            if t.fn in funcs:
                return Fraction(funcs[t.fn](*vals))
            return env[t]
        total = Fraction(0)
        for m, c in t.terms:
            v = c
            for a, e in m:
                v *= term_val(a, bind) ** e
            total += v
        return total

    def ev(f: Formula, bind) -> bool:
        if isinstance(f, BoolConst):
            return f.value
        if isinstance(f, Rel):
            return _cmp(f.op, term_val(f.poly, bind))
        if isinstance(f, PredAtom):
            vals = tuple(term_val(a, bind) for a in f.args)
            return bool(funcs[f.name](*vals))
        if isinstance(f, Not):
            return not ev(f.arg, bind)
        if isinstance(f, And):
            return all(ev(a, bind) for a in f.args)
        if isinstance(f, Or):
            return any(ev(a, bind) for a in f.args)
        if isinstance(f, Implies):
            return (not ev(f.lhs, bind)) or ev(f.rhs, bind)
        if isinstance(f, Iff):
            return ev(f.lhs, bind) == ev(f.rhs, bind)
        if isinstance(f, (Forall, Exists)):
            if domain is None:
                raise ValueError("quantifier evaluation needs a domain")
            pools = [domain[v.sort.name] for v in f.vars]
            results = (ev(f.body, {**bind, **dict(zip(f.vars, vals))}) for vals in itertools.product(*pools))
            return all(results) if isinstance(f, Forall) else any(results)
        raise TypeError(f)

    return ev(phi, {})


# --------------------------------------------------------------------------
# normal forms


Clause = frozenset  # frozenset[Rel]


def nnf(phi: Formula, positive: bool = True) -> Formula:
    """Negation normal form without Not, Implies or Iff."""
    if isinstance(phi, BoolConst):
        return phi if positive else BoolConst(not phi.value)
    if isinstance(phi, Rel):
        if positive:
            return phi
        return disj(*phi.negate())
    if isinstance(phi, PredAtom):
        raise TypeError("encode predicate atoms before normal-form conversion")
    if isinstance(phi, Not):
        return nnf(phi.arg, not positive)
    if isinstance(phi, And):
        parts = [nnf(a, positive) for a in phi.args]
        return conj(*parts) if positive else disj(*parts)
    if isinstance(phi, Or):
        parts = [nnf(a, positive) for a in phi.args]
        return disj(*parts) if positive else conj(*parts)
    if isinstance(phi, Implies):
        if positive:
            return disj(nnf(phi.lhs, False), nnf(phi.rhs, True))
        return conj(nnf(phi.lhs, True), nnf(phi.rhs, False))
    if isinstance(phi, Iff):
        a, b = phi.lhs, phi.rhs
        if positive:
            return conj(disj(nnf(a, False), nnf(b, True)), disj(nnf(a, True), nnf(b, False)))
        return disj(conj(nnf(a, True), nnf(b, False)), conj(nnf(a, False), nnf(b, True)))
    if isinstance(phi, Forall):
        body = nnf(phi.body, positive)
        return Forall(phi.vars, body) if positive else Exists(phi.vars, body)
    if isinstance(phi, Exists):
        body = nnf(phi.body, positive)
        return Exists(phi.vars, body) if positive else Forall(phi.vars, body)
    raise TypeError(phi)


def encode_predicates(phi: Formula) -> Formula:
    """Replace ``p(args)`` by ``p(args) > 0`` with ``p`` read as a real function."""

    def enc(a):
        if isinstance(a, PredAtom):
            return rel(">", App(a.name, a.args, REAL), 0)
        return a

    return map_atoms(phi, enc)


def skolemize(phi: Formula, names: NameSupply, *, taken_vars: set | None = None):
    """Skolemise ``phi`` (outer existentials become fresh constants).

    Returns ``(matrix, universals, constants)`` where ``matrix`` is
    quantifier-free with universal variables free.  Raises
    :class:`NestedSkolemError` for an existential below a universal.
    """
    phi = nnf(encode_predicates(phi))
    taken = set(taken_vars or ()) | all_var_names(phi)
    universals: list[Var] = []
    consts: list[App] = []

    def go(f: Formula, under_forall: bool) -> Formula:
        if isinstance(f, (Rel, BoolConst)):
            return f
        if isinstance(f, And):
            return conj(*[go(a, under_forall) for a in f.args])
        if isinstance(f, Or):
            return disj(*[go(a, under_forall) for a in f.args])
        if isinstance(f, Exists):
            if under_forall:
                raise NestedSkolemError(
                    f"existential {', '.join(v.name for v in f.vars)} below a universal needs a Skolem function")
            sigma = {}
            for v in f.vars:
                c = App(names.fresh(v.name), (), v.sort)
                consts.append(c)
                sigma[v] = c
            return go(substitute(f.body, sigma), under_forall)
        if isinstance(f, Forall):
            sigma = {}
            for v in f.vars:
                nv = v
                if v.name in {u.name for u in universals}:
                    nm = _fresh_name(v.name, taken | {u.name for u in universals})
                    taken.add(nm)
                    nv = Var(nm, v.sort)
                    sigma[v] = nv
                universals.append(nv)
            body = substitute(f.body, sigma) if sigma else f.body
            return go(body, True)
        raise TypeError(f)

    matrix = go(phi, False)
    return matrix, universals, consts


def cnf_clauses(phi: Formula, limit: int = 100000) -> list:
    """CNF of a quantifier-free NNF formula, as a list of clauses (frozensets of Rel)."""
    if isinstance(phi, BoolConst):
        return [] if phi.value else [frozenset()]
    if isinstance(phi, Rel):
        return [frozenset([phi])]
    if isinstance(phi, And):
        out = []
        for a in phi.args:
            out.extend(cnf_clauses(a, limit))
            if len(out) > limit:
                raise BlowupError("clause limit exceeded")
        return _dedupe(out)
    if isinstance(phi, Or):
        acc = [frozenset()]
        for a in phi.args:
            sub = cnf_clauses(a, limit)
            acc = [c1 | c2 for c1 in acc for c2 in sub]
            if len(acc) > limit:
                raise BlowupError("clause limit exceeded")
        return _dedupe([c for c in acc if not clause_is_tautology(c)])
    phi2 = nnf(phi)
    if phi2 is phi:
        raise TypeError(f"not quantifier-free NNF: {phi!r}")
    return cnf_clauses(phi2, limit)


def _dedupe(cs: list) -> list:
    seen = set()
    out = []
    for c in cs:
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


def clause_is_tautology(c: Clause) -> bool:
    for lit in c:
        comp = lit.negate()
        if len(comp) == 1 and comp[0] in c:
            return True
        if lit.op == "=":
            continue
    # p = 0, p < 0, -p < 0 together cover everything
    for lit in c:
        if lit.op == "<" and make_rel("<", -lit.poly) in c and make_rel("=", lit.poly) in c:
            return True
    return False


def cube_is_contradictory(cube: frozenset) -> bool:
    for lit in cube:
        comp = lit.negate()
        if len(comp) == 1 and comp[0] in cube:
            return True
        if lit.op == "=" and (comp[0] in cube or comp[1] in cube):
            return True
    return False


def skolemize_and_clausify(phi: Formula, names: NameSupply | None = None, limit: int = 100000):
    """Skolemise and convert to clauses; returns ``(clauses, skolem_constants)``."""
    names = names or NameSupply()
    matrix, _u, consts = skolemize(phi, names)
    return cnf_clauses(matrix, limit), consts


def to_dnf(phi: Formula, limit: int = 4096) -> list:
    """DNF of a quantifier-free formula as a list of cubes (frozensets of Rel)."""
    phi = nnf(encode_predicates(phi))

    def go(f):
        if isinstance(f, BoolConst):
            return [frozenset()] if f.value else []
        if isinstance(f, Rel):
            return [frozenset([f])]
        if isinstance(f, Or):
            out = []
            for a in f.args:
                out.extend(go(a))
                if len(out) > limit:
                    raise BlowupError("cube limit exceeded")
            return _dedupe(out)
        if isinstance(f, And):
            acc = [frozenset()]
            for a in f.args:
                sub = go(a)
                acc = [c1 | c2 for c1 in acc for c2 in sub]
                acc = [c for c in acc if not cube_is_contradictory(c)]
                if len(acc) > limit:
                    raise BlowupError("cube limit exceeded")
            return _dedupe(acc)
        raise TypeError(f"not quantifier-free: {f!r}")

    return go(phi)


def clause_formula(c: Clause) -> Formula:
    return disj(*sorted(c))


def clauses_formula(cs: Iterable[Clause]) -> Formula:
    return conj(*[clause_formula(c) for c in cs])


def universal_closure(phi: Formula) -> Formula:
    vs = sorted(free_vars(phi), key=lambda v: v.key())
    return forall(vs, phi)


# --------------------------------------------------------------------------
# pretty printing (concrete syntax of problem files)


def _fmt_num(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, App):
        if not t.args:
            return t.fn
        return f"{t.fn}({', '.join(format_term(a) for a in t.args)})"
    if isinstance(t, Poly):
        return _fmt_poly(t)
    return repr(t)


def _fmt_mono(m: Monomial) -> str:
    parts = []
    for a, e in m:
        parts.extend([format_term(a)] * e)
    return "*".join(parts)


def _fmt_sum(items) -> str:
    if not items:
        return "0"
    out = []
    for i, (m, c) in enumerate(items):
        neg = c < 0
        mag = -c if neg else c
        if not m:
            body = _fmt_num(mag)
        elif mag == 1:
            body = _fmt_mono(m)
        else:
            body = f"{_fmt_num(mag)}*{_fmt_mono(m)}"
        if i == 0:
            out.append(("-" + body) if neg else body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


def _fmt_poly(p: Poly) -> str:
    return _fmt_sum(list(p.terms))


def format_rel(r: Rel) -> str:
    pos = [(m, c) for m, c in r.poly.terms if c > 0 and m]
    neg = [(m, -c) for m, c in r.poly.terms if c < 0 and m]
    k = r.poly.const_value()
    op = r.op
    if pos:
        rhs = neg + ([((), -k)] if k else [])
        return f"{_fmt_sum(pos)} {op} {_fmt_sum(rhs)}"
    flip = {"<=": ">=", "<": ">", "=": "="}[op]
    return f"{_fmt_sum(neg)} {flip} {_fmt_sum([((), k)] if k else [])}"


_PREC = {"iff": 1, "imp": 2, "or": 3, "and": 4, "not": 5, "atom": 6, "q": 0}


def format_formula(phi: Formula, prec: int = 0, tail: bool = True) -> str:
    """Infix rendering; ``tail`` says nothing follows at this level, so a
    quantifier (whose body extends to the right) needs no parentheses."""

    def wrap(s, p):
        return f"({s})" if p < prec else s

    def inner(p):
        # operands of an operator that will be parenthesised end at the ")"
        return tail or p < prec

    if isinstance(phi, BoolConst):
        return "true" if phi.value else "false"
    if isinstance(phi, Rel):
        return wrap(format_rel(phi), 6)
    if isinstance(phi, PredAtom):
        return f"{phi.name}({', '.join(format_term(a) for a in phi.args)})" if phi.args else phi.name
    if isinstance(phi, Not):
        return wrap("!" + format_formula(phi.arg, 6, inner(5)), 5)
    if isinstance(phi, And):
        n = len(phi.args)
        return wrap(" & ".join(format_formula(a, 5, i == n - 1 and inner(4)) for i, a in enumerate(phi.args)), 4)
    if isinstance(phi, Or):
        n = len(phi.args)
        return wrap(" | ".join(format_formula(a, 4, i == n - 1 and inner(3)) for i, a in enumerate(phi.args)), 3)
    if isinstance(phi, Implies):
        return wrap(f"{format_formula(phi.lhs, 3, False)} -> {format_formula(phi.rhs, 2, inner(2))}", 2)
    if isinstance(phi, Iff):
        return wrap(f"{format_formula(phi.lhs, 2, False)} <-> {format_formula(phi.rhs, 2, inner(1))}", 1)
    if isinstance(phi, (Forall, Exists)):
        q = "forall" if isinstance(phi, Forall) else "exists"
        vs = ", ".join(f"{v.name}:{v.sort.name}" for v in phi.vars)
        s = f"{q} {vs}. {format_formula(phi.body, 0, True)}"
        return s if tail else f"({s})"
    raise TypeError(phi)


def format_clause(c: Clause) -> str:
    if not c:
        return "false"
    return universal_closure_str(clause_formula(c))


def universal_closure_str(phi: Formula) -> str:
    return format_formula(universal_closure(phi))


# --------------------------------------------------------------------------
# signatures and well-sortedness


@dataclass(frozen=True)
class FunDecl:
    name: str
    arg_sorts: tuple
    result: Sort

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)


@dataclass
class Signature:
    sorts: dict
    functions: dict
    predicates: dict

    @staticmethod
    def empty() -> "Signature":
        return Signature({"real": REAL, "int": INT}, {}, {})

    def fun(self, name: str) -> FunDecl | None:
        d = self.functions.get(name)
        if d is None and name.endswith("'"):
            base = self.functions.get(name.rstrip("'"))
            if base is not None:
                return FunDecl(name, base.arg_sorts, base.result)
        return d

    def names(self) -> set:
        return set(self.functions) | set(self.predicates) | set(self.sorts)


def _compatible(expected: Sort, t: Term) -> bool:
    if isinstance(t, Poly):
        a = t.single_atom()
        if a is not None:
            return a.sort == expected
        if t.is_const():
            if expected == REAL:
                return True
            if expected == INT:
                return t.const_value().denominator == 1
            return False
        got = t.sort_of()
        if expected == INT:
            return got == INT
        if expected == REAL:
            return all(a.sort == REAL for a in t.atoms())
        return False
    return getattr(t, "sort", None) == expected


def well_sorted_term(t: Term, sig: Signature) -> bool:
    if isinstance(t, Var):
        return True
    if isinstance(t, App):
        d = sig.fun(t.fn)
        if d is None:
            return False
        if len(d.arg_sorts) != len(t.args) or d.result != t.sort:
            return False
        return all(_compatible(s, a) and well_sorted_term(a, sig) for s, a in zip(d.arg_sorts, t.args))
    if isinstance(t, Poly):
        atoms = t.atoms()
        if len(t.terms) > 1 or t.single_atom() is None:
            if any(not a.sort.numeric for a in atoms):
                return False
        return all(well_sorted_term(a, sig) for a in atoms)
    return False


def well_sorted(phi: Formula, sig: Signature) -> bool:
    """True iff every application in ``phi`` matches its declaration."""
    if isinstance(phi, PredAtom):
        ps = sig.predicates.get(phi.name)
        if ps is None or len(ps) != len(phi.args):
            return False
        return all(_compatible(s, a) and well_sorted_term(a, sig) for s, a in zip(ps, phi.args))
    if isinstance(phi, Rel):
        p = phi.poly
        atoms = p.atoms()
        if any(not a.sort.numeric for a in atoms):
            # only equalities between two uninterpreted terms are allowed
            if phi.op != "=" or len(atoms) != 2 or len(p.terms) != 2 or not p.is_linear():
                return False
            a, b = sorted(atoms, key=lambda x: x.key())
            if a.sort != b.sort:
                return False
        return all(well_sorted_term(a, sig) for a in atoms)
    if isinstance(phi, BoolConst):
        return True
    if isinstance(phi, Not):
        return well_sorted(phi.arg, sig)
    if isinstance(phi, (And, Or)):
        return all(well_sorted(a, sig) for a in phi.args)
    if isinstance(phi, (Implies, Iff)):
        return well_sorted(phi.lhs, sig) and well_sorted(phi.rhs, sig)
    if isinstance(phi, (Forall, Exists)):
        return well_sorted(phi.body, sig)
    return False


def clause_vars(c: Clause) -> set:
    out = set()
    for lit in c:
        out |= term_vars(lit.poly)
    return out


def clause_apps(c: Clause) -> set:
    out = set()
    for lit in c:
        for s in subterms(lit.poly):
            if isinstance(s, App):
                out.add(s)
    return out


def clause_substitute(c: Clause, sigma: Mapping[Var, Term]):
    """Apply ``sigma``; returns a clause, or None when the result is valid."""
    out = set()
    for lit in c:
        r = make_rel(lit.op, as_poly(substitute_term(lit.poly, sigma)))
        if r == TRUE:
            return None
        if r == FALSE:
            continue
        out.add(r)
    c2 = frozenset(out)
    if clause_is_tautology(c2):
        return None
    return c2


def clause_replace(c: Clause, mapping: Mapping[Term, Term]):
    out = set()
    for lit in c:
        r = make_rel(lit.op, as_poly(replace_in_term(lit.poly, mapping)))
        if r == TRUE:
            return None
        if r == FALSE:
            continue
        out.add(r)
    c2 = frozenset(out)
    if clause_is_tautology(c2):
        return None
    return c2
