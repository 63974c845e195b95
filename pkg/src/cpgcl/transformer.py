"""
Weakest (liberal) pre-expectation transformers and the conditional quotient.

Loops are evaluated by fixpoint iteration: from 0 for ``wp`` (least fixpoint)
and from 1 for ``wlp`` (greatest fixpoint).  The k-th iterate is exactly the
pre-expectation of the loop unrolled k times, so a non-converging iteration
still yields a sound bound.  Two things can make the iteration exact:

* the iterate stops changing after simplification (a syntactic fixpoint), or
* the loop functional is affine on a finite basis of guarded monomials with a
  nonnegative matrix ``A`` such that ``(I - A)`` has a nonnegative inverse.  The
  iterates then converge and their limit solves ``c = A c + b``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple, Union

from . import expectation as ex
from .errors import (
    BoundExceeded,
    Infeasible,
    NondeterminismUnsupported,
    NonConvergent,
    QuotientProbabilityUnsupported,
    UninstantiatedParameter,
)
from .expectation import Expectation
from .linalg import inverse
from .syntax import (
    Abort,
    Assign,
    Const,
    Ite,
    NDChoice,
    Observe,
    PChoice,
    Param,
    Program,
    Quotient,
    Seq,
    Skip,
    Stmt,
    While,
    is_fully_probabilistic,
    negate,
)
from .values import UNDEFINED, AnalysisValue, Exact, Interval, quotient

DEFAULT_UNROLL = 64
MAX_BASIS = 64


@dataclass(frozen=True)
class ExactExpectation:
    value: Expectation
    exact = True


@dataclass(frozen=True)
class UnrolledBound:
    k: int
    value: Expectation
    direction: str  # "lower" (wp) or "upper" (wlp)
    exact = False


PreExpectationResult = Union[ExactExpectation, UnrolledBound]


def _body(p: Union[Program, Stmt]) -> Stmt:
    return p.body if isinstance(p, Program) else p


def _prob(p) -> Fraction:
    if isinstance(p, Const):
        return p.value
    if isinstance(p, Param):
        raise UninstantiatedParameter(p.name)
    if isinstance(p, Quotient):
        raise QuotientProbabilityUnsupported(
            "state-dependent probabilities are only supported by the operational engine"
        )
    raise TypeError(p)


Vec = Tuple[Expectation, ...]


class _Engine:
    """Shared recursion for wp, wlp and the paired transformer.

    A "vector" carries one expectation per component; ``liberal[i]`` says
    whether component i follows the wlp rules (abort gives 1, loops start at 1).
    """

    def __init__(self, liberal: Tuple[bool, ...], depth: int, merge: bool = True, fast: bool = True):
        self.liberal = liberal
        self.fast = fast
        self.depth = depth
        self.merge = merge
        self.exact = True

    def run(self, s: Stmt, post: Vec) -> Vec:
        m = self.merge
        if isinstance(s, Skip):
            return post
        if isinstance(s, Abort):
            return tuple(ex.ONE if lib else ex.ZERO for lib in self.liberal)
        if isinstance(s, Assign):
            return tuple(ex.substitute(f, s.var, s.expr, m) for f in post)
        if isinstance(s, Observe):
            return tuple(ex.guard_mul(s.guard, f, m) for f in post)
        if isinstance(s, Seq):
            return self.run(s.first, self.run(s.second, post))
        if isinstance(s, Ite):
            a = self.run(s.then, post)
            b = self.run(s.orelse, post)
            pos = ex.bexp_guards(s.guard)
            neg = ex.bexp_guards(negate(s.guard))
            return tuple(
                ex.add(ex.guard_mul_cases(pos, x, m), ex.guard_mul_cases(neg, y, m), m) for x, y in zip(a, b)
            )
        if isinstance(s, PChoice):
            p = _prob(s.prob)
            a = self.run(s.left, post)
            b = self.run(s.right, post)
            return tuple(ex.add(ex.scale(p, x, m), ex.scale(1 - p, y, m), m) for x, y in zip(a, b))
        if isinstance(s, NDChoice):
            a = self.run(s.left, post)
            b = self.run(s.right, post)
            return tuple(ex.minimum(x, y) for x, y in zip(a, b))
        if isinstance(s, While):
            return self.loop(s, post)
        raise TypeError(f"not a statement: {s!r}")

    def loop(self, s: While, post: Vec) -> Vec:
        pos = ex.bexp_guards(s.guard)
        neg = ex.bexp_guards(negate(s.guard))
        init = tuple(ex.ONE if lib else ex.ZERO for lib in self.liberal)

        def functional(x: Vec, merge: bool = True) -> Tuple[Vec, bool]:
            inner = _Engine(self.liberal, self.depth, merge, self.fast)
            body = inner.run(s.body, x)
            out = tuple(
                ex.add(ex.guard_mul_cases(pos, b, merge), ex.guard_mul_cases(neg, f, merge), merge)
                for b, f in zip(body, post)
            )
            return out, inner.exact

        value, exact = solve_loop(functional, init, self.depth, self.fast)
        self.exact = self.exact and exact
        return value


def solve_loop(functional, init: Vec, depth: int, fast: bool = True) -> Tuple[Vec, bool]:
    """Iterate ``functional`` from ``init``; returns the value and whether it is exact.

    ``functional(x, merge)`` returns the image of ``x`` and whether it was
    computed exactly (nested loops may only be bounded).
    """
    x = init
    exact = True
    for k in range(1, depth + 1):
        y, ok = functional(x)
        exact = exact and ok
        if y == x:
            return x, exact
        x = y
        if fast and exact and (k == 2 or (k >= 4 and k & (k - 1) == 0)):
            acc = accelerate(functional, init, x)
            if acc is not None:
                return acc, True
    return x, False


def accelerate(functional, init: Vec, current: Vec) -> Optional[Vec]:
    """Exact fixpoint of an affine loop functional on a finite basis, if certifiable."""
    if not all(isinstance(v, ex.TermSum) for v in init + current):
        return None
    n_comp = len(init)
    zero = tuple(ex.ZERO for _ in range(n_comp))
    f0, ok = functional(zero, False)
    if not ok or not all(isinstance(v, ex.TermSum) for v in f0):
        return None
    b_coords = _coords(f0)
    if b_coords is None:
        return None
    keys: List = []
    index: Dict = {}

    def want(k):
        if k not in index:
            index[k] = len(keys)
            keys.append(k)

    for vec in (current, init, f0):
        coords = _coords(vec)
        if coords is None:
            return None
        for k in coords:
            want(k)
    columns: List[Dict] = []
    j = 0
    while j < len(keys):
        if len(keys) > MAX_BASIS:
            return None
        comp, g, mono = keys[j]
        basis = list(zero)
        basis[comp] = ex.from_coordinates({(g, mono): Fraction(1)}, merge=False)
        image, ok = functional(tuple(basis), False)
        if not ok or not all(isinstance(v, ex.TermSum) for v in image):
            return None
        coords = _coords(image)
        if coords is None:
            return None
        col = {}
        for k in set(coords) | set(b_coords):
            v = coords.get(k, 0) - b_coords.get(k, 0)
            if v != 0:
                if v < 0:
                    return None
                want(k)
                col[k] = v
        columns.append(col)
        j += 1
    n = len(keys)
    m = [[Fraction(int(r == c)) for c in range(n)] for r in range(n)]
    for c, col in enumerate(columns):
        for k, v in col.items():
            m[index[k]][c] -= v
    inv = inverse(m)
    if inv is None or any(v < 0 for row in inv for v in row):
        return None
    b = [b_coords.get(k, Fraction(0)) for k in keys]
    sol = [sum((inv[r][c] * b[c] for c in range(n)), Fraction(0)) for r in range(n)]
    out = []
    for comp in range(n_comp):
        coords = {(g, mono): sol[index[(c, g, mono)]] for (c, g, mono) in keys if c == comp}
        out.append(ex.simplify(ex.from_coordinates(coords, merge=False)))
    return tuple(out)


def _coords(vec: Vec):
    out = {}
    for comp, v in enumerate(vec):
        c = ex.linear_coordinates(v)
        if c is None:
            return None
        for (g, m), val in c.items():
            out[(comp, g, m)] = out.get((comp, g, m), 0) + val
    return out


# --------------------------------------------------------------------------
# public entry points


def _result(value: Expectation, engine: _Engine, direction: str) -> PreExpectationResult:
    if engine.exact:
        return ExactExpectation(value)
    return UnrolledBound(engine.depth, value, direction)


def wp(
    p: Union[Program, Stmt], f: Expectation, unroll_depth: int = DEFAULT_UNROLL, accelerate: bool = True
) -> PreExpectationResult:
    """Weakest pre-expectation of ``f``; a lower bound if some loop did not converge.

    With ``accelerate=False`` loops are only iterated, so an inexact result is
    exactly the pre-expectation of the loops unrolled ``unroll_depth`` times.
    """
    engine = _Engine((False,), unroll_depth, fast=accelerate)
    (value,) = engine.run(_body(p), (f,))
    return _result(value, engine, "lower")


def _check_bounded(g: Expectation):
    value = ex.definite_excess(g, 1)
    if value is not None:
        raise BoundExceeded(value, 1, "liberal post-expectation")


def wlp(
    p: Union[Program, Stmt], g: Expectation, unroll_depth: int = DEFAULT_UNROLL, accelerate: bool = True
) -> PreExpectationResult:
    """Weakest liberal pre-expectation of ``g`` (bounded by 1); an upper bound if not exact."""
    _check_bounded(g)
    engine = _Engine((True,), unroll_depth, fast=accelerate)
    (value,) = engine.run(_body(p), (g,))
    return _result(value, engine, "upper")


def cwp_pair(
    p: Union[Program, Stmt], f: Expectation, g: Expectation = ex.ONE, unroll_depth: int = DEFAULT_UNROLL
) -> Tuple[PreExpectationResult, PreExpectationResult]:
    """The paired conditional transformer, computed by the pair rules directly."""
    body = _body(p)
    if not is_fully_probabilistic(body):
        raise NondeterminismUnsupported()
    _check_bounded(g)
    engine = _Engine((False, True), unroll_depth)
    a, b = engine.run(body, (f, g))
    return _result(a, engine, "lower"), _result(b, engine, "upper")


def _at(result: PreExpectationResult, state: Mapping[str, int]) -> Fraction:
    return ex.eval_exp(result.value, state)


def cwp(
    p: Union[Program, Stmt],
    f: Expectation,
    state: Mapping[str, int],
    unroll_depth: int = DEFAULT_UNROLL,
    post_bound: Optional[Fraction] = None,
    strict: bool = False,
) -> AnalysisValue:
    """Conditional expected value ``wp(f) / wlp(1)`` at ``state``.

    Returns Undefined when the program is infeasible from ``state`` (or raises
    Infeasible with ``strict``).  If a loop has no exact fixpoint the result is
    an Interval, which needs ``post_bound`` as an upper bound of ``f``.
    """
    body = _body(p)
    if not is_fully_probabilistic(body):
        raise NondeterminismUnsupported()
    num = wp(body, f, unroll_depth)
    den = wlp(body, ex.ONE, unroll_depth)
    n_val, d_val = _at(num, state), _at(den, state)
    if num.exact and den.exact:
        if d_val == 0:
            if strict:
                raise Infeasible(state)
            return UNDEFINED
        return Exact(n_val / d_val)
    if d_val == 0:
        return UNDEFINED
    if post_bound is None:
        raise NonConvergent(
            f"no loop fixpoint within {unroll_depth} unrollings; supply a post bound to get an interval"
        )
    bound = Fraction(post_bound)
    terminated = _at(wp(body, ex.ONE, unroll_depth), state)
    upper_num = n_val + (d_val - terminated) * bound
    hi = bound if terminated == 0 else min(bound, upper_num / terminated)
    lo = n_val / d_val
    return Interval(lo, max(lo, hi))


@dataclass(frozen=True)
class QuotientTable:
    wp_over_wlp1: AnalysisValue
    wlp_over_wlp1: AnalysisValue
    wp_over_wp1: AnalysisValue
    wlp_over_wp1: AnalysisValue

    NAMES = ("wp/wlp1", "wlp/wlp1", "wp/wp1", "wlp/wp1")

    @property
    def values(self) -> Tuple[AnalysisValue, ...]:
        return (self.wp_over_wlp1, self.wlp_over_wlp1, self.wp_over_wp1, self.wlp_over_wp1)

    @property
    def not_a_probability(self) -> Tuple[bool, ...]:
        return tuple(isinstance(v, Exact) and v.value > 1 for v in self.values)

    def __str__(self):
        return " ".join(str(v) for v in self.values)


def quotient_table(
    p: Union[Program, Stmt], f: Expectation, state: Mapping[str, int], unroll_depth: int = DEFAULT_UNROLL
) -> QuotientTable:
    """The four normalizations of ``f``: wp or wlp of f over wlp(1) or wp(1)."""
    body = _body(p)
    if not is_fully_probabilistic(body):
        raise NondeterminismUnsupported()
    results = [wp(body, f, unroll_depth), wlp(body, f, unroll_depth), wp(body, ex.ONE, unroll_depth), wlp(body, ex.ONE, unroll_depth)]
    if not all(r.exact for r in results):
        raise NonConvergent(f"no loop fixpoint within {unroll_depth} unrollings")
    wpf, wlpf, wp1, wlp1 = (_at(r, state) for r in results)
    return QuotientTable(quotient(wpf, wlp1), quotient(wlpf, wlp1), quotient(wpf, wp1), quotient(wlpf, wp1))
