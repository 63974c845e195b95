"""
Symbolic expectations: maps from states to nonnegative rationals (or infinity).

An expectation in normal form is either a :class:`TermSum`, a sum of guarded
polynomials ``[G1]*p1 + ... + [Gn]*pn``, or a :class:`Min` of term sums.
Guards are conjunctions of integer constraints ``P = 0``, ``P != 0`` and
``P <= 0`` over polynomials with integer coefficients; polynomials carry exact
rational coefficients.  ``None`` as a polynomial stands for the value infinity.

All constructors keep terms in a canonical order, so ``simplify(f) ==
simplify(g)`` is a sound (if incomplete) test for semantic equality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import NegativeExpectation
from .syntax import (
    AExp,
    And,
    BExp,
    BoolConst,
    Cmp,
    IntConst,
    Not,
    Or,
    Var,
    format_rational,
)

INF = math.inf

Mono = Tuple[Tuple[str, int], ...]


def _mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    powers: Dict[str, int] = dict(a)
    for v, k in b:
        powers[v] = powers.get(v, 0) + k
    return tuple(sorted(powers.items()))


def _mono_key(m: Mono):
    return (sum(k for _, k in m), m)


@dataclass(frozen=True, order=True)
class Poly:
    """Polynomial with rational coefficients; ``terms`` is sorted and zero-free."""

    terms: Tuple[Tuple[Mono, Fraction], ...] = ()

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash(self.terms)
            object.__setattr__(self, "_hash", h)
        return h

    @staticmethod
    def make(coeffs: Mapping[Mono, Fraction]) -> "Poly":
        items = [(m, c if type(c) is Fraction else Fraction(c)) for m, c in coeffs.items() if c != 0]
        items.sort(key=lambda mc: _mono_key(mc[0]))
        return Poly(tuple(items))

    @staticmethod
    def const(c) -> "Poly":
        return Poly.make({(): Fraction(c)})

    @staticmethod
    def var(name: str) -> "Poly":
        return Poly(((((name, 1),), Fraction(1)),))

    @staticmethod
    def from_aexp(e: AExp) -> "Poly":
        if isinstance(e, IntConst):
            return Poly.const(e.value)
        if isinstance(e, Var):
            return Poly.var(e.name)
        l = Poly.from_aexp(e.left)
        r = Poly.from_aexp(e.right)
        if e.op == "+":
            return l + r
        if e.op == "-":
            return l - r
        return l * r

    # -- arithmetic --------------------------------------------------------

    def as_dict(self) -> Dict[Mono, Fraction]:
        return dict(self.terms)

    def __add__(self, other: "Poly") -> "Poly":
        d = self.as_dict()
        for m, c in other.terms:
            d[m] = d.get(m, 0) + c
        return Poly.make(d)

    def __neg__(self) -> "Poly":
        return Poly(tuple((m, -c) for m, c in self.terms))

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = Fraction(other)
            if other == 0:
                return ZERO_POLY
            return Poly(tuple((m, c * other) for m, c in self.terms))
        d: Dict[Mono, Fraction] = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                m = _mono_mul(m1, m2)
                d[m] = d.get(m, 0) + c1 * c2
        return Poly.make(d)

    def __rmul__(self, other) -> "Poly":
        return self * other

    def __pow__(self, k: int) -> "Poly":
        return reduce(lambda a, b: a * b, [self] * k, ONE_POLY)

    # -- inspection --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(not m for m, _ in self.terms)

    def const_value(self) -> Fraction:
        for m, c in self.terms:
            if not m:
                return c
        return Fraction(0)

    def variables(self) -> frozenset:
        return frozenset(v for m, _ in self.terms for v, _ in m)

    def is_linear(self) -> bool:
        return all(sum(k for _, k in m) <= 1 for m, _ in self.terms)

    def evaluate(self, state: Mapping[str, int]) -> Fraction:
        total = Fraction(0)
        for m, c in self.terms:
            v = c
            for name, k in m:
                v *= state[name] ** k
            total += v
        return total

    def substitute(self, mapping: Mapping[str, "Poly"]) -> "Poly":
        if not any(v in mapping for v in self.variables()):
            return self
        result = ZERO_POLY
        for m, c in self.terms:
            term = Poly.const(c)
            rest: List[Tuple[str, int]] = []
            for name, k in m:
                if name in mapping:
                    term = term * (mapping[name] ** k)
                else:
                    rest.append((name, k))
            if rest:
                term = term * Poly(((tuple(rest), Fraction(1)),))
            result = result + term
        return result

    def __str__(self):
        if not self.terms:
            return "0"
        parts: List[str] = []
        for i, (m, c) in enumerate(self.terms):
            sign = "-" if c < 0 else "+"
            a = abs(c)
            factors = [name if k == 1 else f"{name}^{k}" for name, k in m]
            if not factors:
                body = format_rational(a)
            elif a == 1:
                body = "*".join(factors)
            else:
                body = "*".join([format_rational(a)] + factors)
            if i == 0:
                parts.append(body if sign == "+" else f"-{body}")
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)


ZERO_POLY = Poly()
ONE_POLY = Poly.const(1)


# --------------------------------------------------------------------------
# atoms and guards


@dataclass(frozen=True, order=True)
class Atom:
    """``poly = 0`` (eq), ``poly != 0`` (ne) or ``poly <= 0`` (le) over the integers."""

    kind: str
    poly: Poly

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.kind, self.poly))
            object.__setattr__(self, "_hash", h)
        return h

    def holds(self, state: Mapping[str, int]) -> bool:
        v = self.poly.evaluate(state)
        if self.kind == "eq":
            return v == 0
        if self.kind == "ne":
            return v != 0
        return v <= 0

    def __str__(self):
        lhs = Poly(tuple((m, c) for m, c in self.poly.terms if m and c > 0))
        rhs = -Poly(tuple((m, c) for m, c in self.poly.terms if m and c < 0))
        c0 = Poly.const(self.poly.const_value())
        if lhs.is_zero():
            lhs = c0
        else:
            rhs = rhs - c0
        op = {"eq": "=", "ne": "!=", "le": "<="}[self.kind]
        return f"{lhs} {op} {rhs}"


Guard = Tuple[Atom, ...]
TRUE_GUARD: Guard = ()


def canon_atom(kind: str, poly: Poly) -> Union[Atom, bool]:
    """Canonical form of an integer constraint, or its truth value if closed."""
    if poly.is_const():
        v = poly.const_value()
        return {"eq": v == 0, "ne": v != 0, "le": v <= 0}[kind]
    # clear denominators, then divide by the content of the nonconstant part
    lcm = reduce(lambda a, b: a * b // math.gcd(a, b), (c.denominator for _, c in poly.terms), 1)
    if lcm != 1:
        poly = poly * lcm
    g = 0
    for m, c in poly.terms:
        if m:
            g = math.gcd(g, int(c))
    c0 = poly.const_value()
    if kind in ("eq", "ne"):
        if c0 % g != 0:
            return kind == "ne"
        poly = poly * Fraction(1, g)
        lead = next(c for m, c in poly.terms if m)
        if lead < 0:
            poly = -poly
        return Atom(kind, poly)
    if g != 1:
        # g*Q + c0 <= 0  iff  Q + ceil(c0/g) <= 0
        d = poly.as_dict()
        d.pop((), None)
        q = Poly.make({m: c / g for m, c in d.items()})
        poly = q + Poly.const(-math.floor(-c0 / g))
    return Atom(kind, poly)


def negate_atom(a: Atom) -> Atom:
    if a.kind == "eq":
        return Atom("ne", a.poly)
    if a.kind == "ne":
        return Atom("eq", a.poly)
    neg = canon_atom("le", -a.poly + ONE_POLY)
    assert isinstance(neg, Atom)
    return neg


def cmp_atom(op: str, left: AExp, right: AExp) -> Union[Atom, bool]:
    l, r = Poly.from_aexp(left), Poly.from_aexp(right)
    if op == "=":
        return canon_atom("eq", l - r)
    if op == "!=":
        return canon_atom("ne", l - r)
    if op == "<":
        return canon_atom("le", l - r + ONE_POLY)
    if op == "<=":
        return canon_atom("le", l - r)
    if op == ">":
        return canon_atom("le", r - l + ONE_POLY)
    return canon_atom("le", r - l)


def _cases(b: BExp, positive: bool) -> List[List[Union[Atom, bool]]]:
    """Disjoint conjunctions of atoms whose union is ``b`` (or its negation)."""
    if isinstance(b, BoolConst):
        return [[]] if b.value == positive else []
    if isinstance(b, Cmp):
        op = b.op if positive else {"=": "!=", "!=": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}[b.op]
        return [[cmp_atom(op, b.left, b.right)]]
    if isinstance(b, Not):
        return _cases(b.operand, not positive)
    if isinstance(b, And) and positive or isinstance(b, Or) and not positive:
        return [x + y for x in _cases(b.left, positive) for y in _cases(b.right, positive)]
    # a || b  ==  a  +  !a && b   (and dually for negated conjunctions)
    first = _cases(b.left, positive)
    rest = [x + y for x in _cases(b.left, not positive) for y in _cases(b.right, positive)]
    return first + rest


def bexp_guards(b: BExp) -> List[Guard]:
    out = []
    for case in _cases(b, True):
        t = normalize_term(case, ONE_POLY)
        if t is not None:
            out.append(t[0])
    return out


def guard_holds(g: Guard, state: Mapping[str, int]) -> bool:
    return all(a.holds(state) for a in g)


def guard_str(g: Guard) -> str:
    return " && ".join(str(a) for a in g) if g else "true"


# --------------------------------------------------------------------------
# term normalization


def _pivot(a: Atom) -> Optional[str]:
    """Smallest variable that ``a`` (an equation) can be solved for exactly."""
    best = None
    for m, c in a.poly.terms:
        if len(m) == 1 and m[0][1] == 1 and abs(c) == 1:
            v = m[0][0]
            if sum(1 for mm, _ in a.poly.terms if any(n == v for n, _ in mm)) == 1:
                if best is None or v < best:
                    best = v
    return best


def _bound(a: Atom) -> Optional[Tuple[str, str, Fraction]]:
    """Read ``a`` as ``v <= c`` ('ub'), ``v >= c`` ('lb') or ``v != c`` ('ne')."""
    if a.kind == "eq" or not a.poly.is_linear():
        return None
    nonconst = [(m, c) for m, c in a.poly.terms if m]
    if len(nonconst) != 1:
        return None
    (m, c), = nonconst
    v = m[0][0]
    k = a.poly.const_value()
    if a.kind == "ne":
        return ("ne", v, -k / c)
    return ("ub", v, -k) if c > 0 else ("lb", v, k)


def _tighten(atoms: set) -> Optional[set]:
    bounds: Dict[str, List] = {}
    others = set()
    for a in atoms:
        b = _bound(a)
        if b is None:
            others.add(a)
        else:
            bounds.setdefault(b[1], []).append((b, a))
    out = set(others)
    for v, items in bounds.items():
        lo = max((b[2] for b, _ in items if b[0] == "lb"), default=None)
        hi = min((b[2] for b, _ in items if b[0] == "ub"), default=None)
        nes = sorted({b[2] for b, _ in items if b[0] == "ne"})
        changed = True
        while changed:
            changed = False
            for n in list(nes):
                if (lo is not None and n < lo) or (hi is not None and n > hi):
                    nes.remove(n)
                elif lo is not None and n == lo:
                    nes.remove(n)
                    lo += 1
                    changed = True
                elif hi is not None and n == hi:
                    nes.remove(n)
                    hi -= 1
                    changed = True
        if lo is not None and hi is not None:
            if lo > hi:
                return None
            if lo == hi:
                out.add(Atom("eq", Poly.var(v) - Poly.const(lo)))
                continue
        pv = Poly.var(v)
        if lo is not None:
            out.add(Atom("le", Poly.const(lo) - pv))
        if hi is not None:
            out.add(Atom("le", pv - Poly.const(hi)))
        for n in nes:
            out.add(Atom("ne", pv - Poly.const(n)))
    return out


def normalize_term(atoms: Iterable[Union[Atom, bool]], poly: Optional[Poly]):
    """Canonical ``(guard, poly)`` for ``[/\\ atoms] * poly``; None when the guard is false."""
    current = set()
    for a in atoms:
        if a is True:
            continue
        if a is False:
            return None
        current.add(a)
    for _ in range(64):
        # propagate equations v = e into the other atoms and the polynomial
        progressed = False
        for a in sorted(current):
            if a.kind != "eq":
                continue
            v = _pivot(a)
            if v is None:
                continue
            elsewhere = any(v in b.poly.variables() for b in current if b != a)
            if poly is not None and v in poly.variables():
                elsewhere = True
            if not elsewhere:
                continue
            coeff = a.poly.as_dict()[((v, 1),)]
            sol = (a.poly - Poly.var(v) * coeff) * (-1 / coeff)
            nxt = {a}
            for b in current:
                if b == a:
                    continue
                cb = canon_atom(b.kind, b.poly.substitute({v: sol}))
                if cb is False:
                    return None
                if cb is not True:
                    nxt.add(cb)
            if poly is not None:
                poly = poly.substitute({v: sol})
            current = nxt
            progressed = True
            break
        if progressed:
            continue
        for a in current:
            if negate_atom(a) in current:
                return None
        tightened = _tighten(current)
        if tightened is None:
            return None
        if tightened != current:
            current = tightened
            continue
        break
    return tuple(sorted(current)), poly


# --------------------------------------------------------------------------
# expectations


@dataclass(frozen=True)
class TermSum:
    """``sum [guard] * poly`` with at most one term per guard, sorted by guard."""

    terms: Tuple[Tuple[Guard, Optional[Poly]], ...] = ()

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash(self.terms)
            object.__setattr__(self, "_hash", h)
        return h

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for g, p in self.terms:
            if p is None:
                body = "inf"
            else:
                body = str(p)
            if not g:
                parts.append(body)
            elif p is not None and p == ONE_POLY:
                parts.append(f"[{guard_str(g)}]")
            else:
                if p is not None and len(p.terms) > 1 or (p is not None and p.terms[0][1] < 0):
                    body = f"({body})"
                parts.append(f"[{guard_str(g)}]*{body}")
        return " + ".join(parts)


@dataclass(frozen=True)
class Min:
    """Pointwise minimum of two or more term sums."""

    args: Tuple[TermSum, ...]

    def __str__(self):
        return "min(" + ", ".join(str(a) for a in self.args) + ")"


Expectation = Union[TermSum, Min]

ZERO = TermSum()
ONE = TermSum(((TRUE_GUARD, ONE_POLY),))
INFINITY = TermSum(((TRUE_GUARD, None),))


def const(c) -> TermSum:
    c = Fraction(c)
    return TermSum(((TRUE_GUARD, Poly.const(c)),)) if c != 0 else ZERO


def from_poly(p: Poly) -> TermSum:
    return _collect([(TRUE_GUARD, p)])


def from_aexp(e: AExp) -> TermSum:
    return from_poly(Poly.from_aexp(e))


def indicator(b: BExp) -> TermSum:
    return guard_mul(b, ONE)


def _add_poly(a: Optional[Poly], b: Optional[Poly]) -> Optional[Poly]:
    if a is None or b is None:
        return None
    return a + b


def _collect(terms: Iterable[Tuple[Guard, Optional[Poly]]], merge: bool = True) -> TermSum:
    acc: Dict[Guard, Optional[Poly]] = {}
    for g, p in terms:
        if g in acc:
            acc[g] = _add_poly(acc[g], p)
        else:
            acc[g] = p
    acc = {g: p for g, p in acc.items() if p is None or not p.is_zero()}
    if merge:
        acc = _merge_complements(acc)
    return TermSum(tuple(sorted(acc.items(), key=lambda gp: gp[0])))


def _merge_complements(acc: Dict[Guard, Optional[Poly]]) -> Dict[Guard, Optional[Poly]]:
    """Fold ``[G && a]*p + [G && !a]*p`` into ``[G]*p``."""
    changed = True
    while changed:
        changed = False
        for g, p in list(acc.items()):
            for a in g:
                rest = tuple(x for x in g if x != a)
                other = tuple(sorted(rest + (negate_atom(a),)))
                if other != g and other in acc and acc[other] == p:
                    del acc[g]
                    del acc[other]
                    t = normalize_term(rest, p)
                    if t is not None:
                        ng, np_ = t
                        acc[ng] = _add_poly(acc[ng], np_) if ng in acc else np_
                        if acc[ng] is not None and acc[ng].is_zero():
                            del acc[ng]
                    changed = True
                    break
            if changed:
                break
    return acc


def _mk_min(args: Iterable[TermSum]) -> Expectation:
    flat = []
    for a in args:
        if a == ZERO:
            return ZERO
        if a not in flat and a != INFINITY:
            flat.append(a)
    if not flat:
        return INFINITY
    if len(flat) == 1:
        return flat[0]
    return Min(tuple(sorted(flat, key=str)))


def _parts(f: Expectation) -> Tuple[TermSum, ...]:
    return f.args if isinstance(f, Min) else (f,)


# -- algebra ---------------------------------------------------------------


def add(f: Expectation, g: Expectation, merge: bool = True) -> Expectation:
    if isinstance(f, TermSum) and isinstance(g, TermSum):
        return _collect(f.terms + g.terms, merge)
    return _mk_min(add(a, b, merge) for a in _parts(f) for b in _parts(g))


def scale(alpha, f: Expectation, merge: bool = True) -> Expectation:
    alpha = Fraction(alpha)
    if alpha < 0:
        raise ValueError("scaling factor must be nonnegative")
    if isinstance(f, Min):
        return _mk_min(scale(alpha, a, merge) for a in f.args)
    if alpha == 0:
        return ZERO
    return _collect(((g, None if p is None else p * alpha) for g, p in f.terms), merge)


def mul_poly(p: Poly, f: Expectation, merge: bool = True) -> Expectation:
    """Multiply by a polynomial (assumed nonnegative where it matters)."""
    if isinstance(f, Min):
        return _mk_min(mul_poly(p, a, merge) for a in f.args)
    out = []
    for g, q in f.terms:
        if q is None:
            if p.is_zero():
                continue
            out.append((g, None))
        else:
            t = normalize_term(g, q * p)
            if t is not None:
                out.append(t)
    return _collect(out, merge)


def guard_mul(b: BExp, f: Expectation, merge: bool = True) -> Expectation:
    return guard_mul_cases(bexp_guards(b), f, merge)


def guard_mul_cases(cases: Sequence[Guard], f: Expectation, merge: bool = True) -> Expectation:
    if isinstance(f, Min):
        return _mk_min(guard_mul_cases(cases, a, merge) for a in f.args)
    out = []
    for case in cases:
        for g, p in f.terms:
            t = normalize_term(case + g, p)
            if t is not None:
                out.append(t)
    return _collect(out, merge)


def minimum(f: Expectation, g: Expectation) -> Expectation:
    return _mk_min(_parts(f) + _parts(g))


def mul(f: Expectation, g: Expectation, merge: bool = True) -> Expectation:
    """Pointwise product (used by the surface parser for ``[G]*(...)``)."""
    if isinstance(f, Min) or isinstance(g, Min):
        return _mk_min(mul(a, b, merge) for a in _parts(f) for b in _parts(g))
    out = []
    for g1, p1 in f.terms:
        for g2, p2 in g.terms:
            if p1 is None or p2 is None:
                zero = (p1 is not None and p1.is_zero()) or (p2 is not None and p2.is_zero())
                prod = ZERO_POLY if zero else None
            else:
                prod = p1 * p2
            t = normalize_term(g1 + g2, prod)
            if t is not None:
                out.append(t)
    return _collect(out, merge)


def negate_termsum(f: TermSum) -> TermSum:
    if any(p is None for _, p in f.terms):
        raise ValueError("cannot subtract infinity")
    return TermSum(tuple((g, -p) for g, p in f.terms))


def substitute(f: Expectation, x: str, e: AExp, merge: bool = True) -> Expectation:
    return substitute_poly(f, {x: Poly.from_aexp(e)}, merge)


def substitute_poly(f: Expectation, mapping: Mapping[str, Poly], merge: bool = True) -> Expectation:
    if isinstance(f, Min):
        return _mk_min(substitute_poly(a, mapping, merge) for a in f.args)
    out = []
    for g, p in f.terms:
        atoms = [canon_atom(a.kind, a.poly.substitute(mapping)) for a in g]
        t = normalize_term(atoms, None if p is None else p.substitute(mapping))
        if t is not None:
            out.append(t)
    return _collect(out, merge)


def simplify(f: Expectation, merge: bool = True) -> Expectation:
    if isinstance(f, Min):
        return _mk_min(simplify(a, merge) for a in f.args)
    out = []
    for g, p in f.terms:
        t = normalize_term(g, p)
        if t is not None:
            out.append(t)
    return _collect(out, merge)


# -- evaluation ------------------------------------------------------------


def eval_exp(f: Expectation, state: Mapping[str, int]):
    """Value of ``f`` at ``state``: a nonnegative Fraction or ``INF``."""
    if isinstance(f, Min):
        return min(eval_exp(a, state) for a in f.args)
    total = Fraction(0)
    infinite = False
    for g, p in f.terms:
        if guard_holds(g, state):
            if p is None:
                infinite = True
            else:
                total += p.evaluate(state)
    if infinite:
        return INF
    if total < 0:
        raise NegativeExpectation(state, total)
    return total


def variables(f: Expectation) -> frozenset:
    out = set()
    for part in _parts(f):
        for g, p in part.terms:
            for a in g:
                out |= a.poly.variables()
            if p is not None:
                out |= p.variables()
    return frozenset(out)


def is_constant(f: Expectation) -> bool:
    return isinstance(f, TermSum) and all(not g and p is not None and p.is_const() for g, p in f.terms)


def constant_value(f: Expectation) -> Fraction:
    assert is_constant(f)
    return f.terms[0][1].const_value() if f.terms else Fraction(0)


def upper_bound(f: Expectation) -> Optional[Fraction]:
    """A syntactic upper bound of ``f`` when all its polynomials are constants, else None."""
    bounds = []
    for part in _parts(f):
        total = Fraction(0)
        for g, p in part.terms:
            if p is None or not p.is_const():
                return None
            total += max(p.const_value(), Fraction(0))
        bounds.append(total)
    return min(bounds)


def definite_excess(f: Expectation, bound) -> Optional[Fraction]:
    """A value above ``bound`` that ``f`` certainly reaches, if a single term shows it.

    Terms are nonnegative and normalized guards are satisfiable, so a constant
    term ``c`` forces ``f >= c`` wherever its guard holds.
    """
    if isinstance(f, Min):
        return None
    for g, p in f.terms:
        if p is None:
            return INF
        if p.is_const() and p.const_value() > bound:
            return p.const_value()
    return None


def linear_coordinates(f: TermSum) -> Optional[Dict[Tuple[Guard, Mono], Fraction]]:
    """Decompose ``f`` into coefficients of ``[guard]*monomial`` basis elements."""
    out: Dict[Tuple[Guard, Mono], Fraction] = {}
    for g, p in f.terms:
        if p is None:
            return None
        for m, c in p.terms:
            out[(g, m)] = out.get((g, m), 0) + c
    return out


def from_coordinates(coords: Mapping[Tuple[Guard, Mono], Fraction], merge: bool = True) -> TermSum:
    return _collect(
        ((g, Poly.make({m: c})) for (g, m), c in coords.items() if c != 0), merge
    )
