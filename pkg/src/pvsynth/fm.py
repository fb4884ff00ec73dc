"""Exact Fourier-Motzkin feasibility for conjunctions of linear constraints.

Constraints are ``sum(coeff * var) + const  op  0`` with ``op`` in
``<=``, ``<``, ``=``.  Variables are arbitrary hashable keys (the ground
solver uses monomials, so nonlinear products are treated as opaque
variables).  Integer-sorted constraints are tightened before and during
elimination; integrality of the returned model is not guaranteed and is the
caller's business.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


class FMLimit(RuntimeError):
    pass


@dataclass(frozen=True)
class Lin:
    coeffs: tuple  # sorted tuple of (var, Fraction), no zeros
    const: Fraction
    op: str  # '<=', '<', '='

    def value(self, env) -> Fraction:
        return sum((c * env[v] for v, c in self.coeffs), self.const)

    def holds(self, env) -> bool:
        v = self.value(env)
        return v <= 0 if self.op == "<=" else v < 0 if self.op == "<" else v == 0


def make_lin(coeffs: dict, const, op: str, order) -> Lin:
    items = tuple(sorted(((v, Fraction(c)) for v, c in coeffs.items() if c != 0), key=lambda vc: order(vc[0])))
    return Lin(items, Fraction(const), op)


def _trivial(l: Lin):
    """True/False for variable-free constraints, None otherwise."""
    if l.coeffs:
        return None
    k = l.const
    return k <= 0 if l.op == "<=" else k < 0 if l.op == "<" else k == 0


def tighten(l: Lin) -> Lin:
    """Integer tightening for a constraint over integer variables only."""
    if not l.coeffs:
        return l
    den = l.const.denominator
    for _, c in l.coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for _, c in l.coeffs]
    k = l.const * den  # integral
    g = 0
    for x in ints:
        g = math.gcd(g, abs(x))
    coeffs = tuple((v, Fraction(x, g)) for (v, _), x in zip(l.coeffs, ints))
    if l.op == "=":
        if k.numerator % g != 0:
            return Lin((), Fraction(1), "=")
        return Lin(coeffs, k / g, "=")
    # sum a x + k <= 0, or < 0 which over the integers is <= -1
    bound = -k if l.op == "<=" else -k - 1
    return Lin(coeffs, -Fraction(math.floor(bound / g)), "<=")


class FMSolver:
    """Feasibility of a conjunction with model reconstruction.

    Internally a constraint is ``(coeffs, const, op)`` with ``coeffs`` a dict
    from variable rank to a nonzero int (gcd 1) and ``const`` a Fraction;
    ranks follow ``order`` so the elimination is deterministic.
    """

    def __init__(self, is_int, order, limit: int = 20000):
        self.is_int = is_int  # var -> bool
        self.order = order  # var -> sort key
        self.limit = limit

    def feasible(self, cons: list) -> dict | None:
        """Return a rational model (var -> Fraction) or None if infeasible."""
        names = sorted({v for l in cons for v, _ in l.coeffs}, key=self.order)
        rank = {v: i for i, v in enumerate(names)}
        self._ints = [self.is_int(v) for v in names]
        work = []
        for l in cons:
            den = 1
            for _, c in l.coeffs:
                den = den * c.denominator // math.gcd(den, c.denominator)
            row = self._norm({rank[v]: int(c * den) for v, c in l.coeffs}, l.const * den, l.op)
            if row is False:
                return None
            if row is not None:
                work.append(row)
        subs = []  # (var, row) with row an equality used to define var
        while True:
            best = eq = None
            for row in work:
                if row[2] != "=":
                    continue
                for v, c in row[0].items():
                    # real variables first (integer rows keep their tightening), then unit coefficients
                    r = (0 if not self._ints[v] else 1 if abs(c) == 1 else 2, v)
                    if best is None or r < best:
                        best, eq = r, (row, v)
            if eq is None:
                break
            e, v = eq
            subs.append((v, e))
            new = []
            for m in work:
                if m is e:
                    continue
                m2 = self._eliminate(m, e, v) if v in m[0] else m
                if m2 is False:
                    return None
                if m2 is not None:
                    new.append(m2)
            work = new
        stages = []
        work = self._reduce(work)
        if work is None:
            return None
        while work:
            counts: dict = {}
            for row in work:
                for v, c in row[0].items():
                    p, n = counts.get(v, (0, 0))
                    counts[v] = (p + (c > 0), n + (c < 0))
            v = min(counts, key=lambda x: (counts[x][0] * counts[x][1] - counts[x][0] - counts[x][1], x))
            with_v, rest = [], []
            for row in work:
                (with_v if v in row[0] else rest).append(row)
            stages.append((v, with_v))
            ups = [r for r in with_v if r[0][v] > 0]
            los = [r for r in with_v if r[0][v] < 0]
            for lu in ups:
                for ll in los:
                    r = self._eliminate(lu, ll, v)
                    if r is False:
                        return None
                    if r is not None:
                        rest.append(r)
            work = self._reduce(rest)
            if work is None:
                return None
            if len(work) > self.limit:
                raise FMLimit("constraint limit exceeded during elimination")
        env = self._model(stages, subs)
        return {names[i]: x for i, x in env.items()}

    def _norm(self, d: dict, k, op):
        """Divide by the coefficient gcd and tighten integer rows; False/None when trivial."""
        d = {v: c for v, c in d.items() if c}
        k = Fraction(k)
        if not d:
            ok = k <= 0 if op == "<=" else k < 0 if op == "<" else k == 0
            return None if ok else False
        g = 0
        for c in d.values():
            g = math.gcd(g, c)
        if g != 1:
            d = {v: c // g for v, c in d.items()}
            k = k / g
        if all(self._ints[v] for v in d):
            if op == "=":
                if k.denominator != 1:
                    return False
            elif op == "<=":
                k = Fraction(math.ceil(k))
            else:
                k, op = Fraction(math.floor(k) + 1), "<="
        return (d, k, op)

    def _eliminate(self, a, b, v):
        """Combine ``a`` and ``b`` so that ``v`` cancels (``b`` an equality or of opposite sign)."""
        ca, cb = a[0][v], b[0][v]
        if b[2] == "=":
            # scale a by |cb| (positive), b by any sign
            fa, fb = abs(cb), -ca if cb > 0 else ca
            op = a[2]
        else:
            fa, fb = -cb, ca  # ca > 0 > cb
            op = "<" if (a[2] == "<" or b[2] == "<") else "<="
        d = {u: c * fa for u, c in a[0].items()}
        for u, c in b[0].items():
            d[u] = d.get(u, 0) + c * fb
        d.pop(v, None)
        return self._norm(d, a[1] * fa + b[1] * fb, op)

    def _reduce(self, work: list):
        """Split equalities, drop duplicates, keep the tightest bound per direction."""
        best: dict = {}
        for d, k, op in work:
            key = tuple(sorted(d.items()))
            if op == "=":
                self._keep(best, key, k, "<=")
                self._keep(best, tuple((v, -c) for v, c in key), -k, "<=")
            else:
                self._keep(best, key, k, op)
        # opposite directions with the same coefficients may clash
        for key, (k, op) in best.items():
            o = best.get(tuple((v, -c) for v, c in key))
            if o is not None:
                total = k + o[0]
                if total > 0 or (total == 0 and (op == "<" or o[1] == "<")):
                    return None
        return [(dict(key), k, op) for key, (k, op) in best.items()]

    @staticmethod
    def _keep(best: dict, key, k, op):
        cur = best.get(key)
        # larger const is tighter for  sum + const <= 0
        if cur is None or k > cur[0] or (k == cur[0] and op == "<" and cur[1] == "<="):
            best[key] = (k, op)

    @staticmethod
    def _model(stages, subs) -> dict:
        env: dict = {}
        for v, cons in reversed(stages):
            lo, lo_strict, hi, hi_strict = None, False, None, False
            for d, k, op in cons:
                s = k
                for u, c in d.items():
                    if u != v:
                        s += c * env.setdefault(u, Fraction(0))
                c = d[v]
                bound = -s / c
                strict = op == "<"
                if c > 0:
                    if hi is None or bound < hi or (bound == hi and strict):
                        hi, hi_strict = bound, strict
                else:
                    if lo is None or bound > lo or (bound == lo and strict):
                        lo, lo_strict = bound, strict
            env[v] = pick_value(lo, lo_strict, hi, hi_strict)
        for v, (d, k, _) in reversed(subs):
            s = k + sum((c * env.setdefault(u, Fraction(0)) for u, c in d.items() if u != v), Fraction(0))
            env[v] = -s / d[v]
        return env


def pick_value(lo, ls, hi, hs) -> Fraction:
    """A value in the interval, preferring integers and values near zero."""
    if lo is None and hi is None:
        return Fraction(0)
    if lo is None:
        if hi > 0:
            return Fraction(0)
        c = Fraction(math.floor(hi))
        return c - 1 if (c == hi and hs) else c
    if hi is None:
        if lo < 0:
            return Fraction(0)
        c = Fraction(math.ceil(lo))
        return c + 1 if (c == lo and ls) else c
    if lo < 0 < hi:
        return Fraction(0)
    c = Fraction(math.ceil(lo))
    if c == lo and ls:
        c += 1
    if c < hi or (c == hi and not hs):
        return c
    if lo == hi:
        return lo
    return (lo + hi) / 2
