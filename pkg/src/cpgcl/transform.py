"""
Source-to-source transformations: observation hoisting, replacing observations
by a rejection loop, and replacing iid loops by an observation.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Set, Tuple, Union

from . import expectation as ex
from .errors import LoopFixpointNotFound, NondeterminismUnsupported, NotIid
from .expectation import Expectation
from .syntax import (
    Abort,
    And,
    Assign,
    BoolConst,
    Cmp,
    Const,
    IntConst,
    Ite,
    NDChoice,
    Not,
    Observe,
    PChoice,
    Program,
    Quotient,
    Seq,
    Skip,
    Stmt,
    Var,
    While,
    aexp_vars,
    bexp_vars,
    is_fully_probabilistic,
    negate,
    seq,
    seq_items,
    walk,
)
from .transformer import _Engine, _prob, solve_loop

RERUN = "__rerun"
SAVE_PREFIX = "__s_"
DEFAULT_LOOP_ITERS = 50


@dataclass(frozen=True)
class HoistResult:
    program: Stmt
    h: Expectation


# --------------------------------------------------------------------------
# observation hoisting


def _hoisted_prob(p: Fraction, fl: Expectation, fr: Expectation):
    num = ex.simplify(ex.scale(p, fl))
    den = ex.simplify(ex.add(num, ex.scale(1 - p, fr)))
    if ex.is_constant(num) and ex.is_constant(den):
        d = ex.constant_value(den)
        return Const(p) if d == 0 else Const(ex.constant_value(num) / d)
    return Quotient(num, den)


class _Hoister:
    def __init__(self, max_loop_iters: int):
        self.max_loop_iters = max_loop_iters

    def run(self, s: Stmt, f: Expectation) -> Tuple[Stmt, Expectation]:
        if isinstance(s, Skip):
            return s, f
        if isinstance(s, Abort):
            return s, ex.ONE
        if isinstance(s, Assign):
            return s, ex.substitute(f, s.var, s.expr)
        if isinstance(s, Observe):
            return Skip(), ex.guard_mul(s.guard, f)
        if isinstance(s, Seq):
            q, fq = self.run(s.second, f)
            p, fp = self.run(s.first, fq)
            return Seq(p, q), fp
        if isinstance(s, Ite):
            p, fp = self.run(s.then, f)
            q, fq = self.run(s.orelse, f)
            h = ex.add(ex.guard_mul(s.guard, fp), ex.guard_mul(negate(s.guard), fq))
            return Ite(s.guard, p, q), h
        if isinstance(s, PChoice):
            prob = _prob(s.prob)
            p, fp = self.run(s.left, f)
            q, fq = self.run(s.right, f)
            h = ex.add(ex.scale(prob, fp), ex.scale(1 - prob, fq))
            return PChoice(p, _hoisted_prob(prob, fp, fq), q), h
        if isinstance(s, NDChoice):
            raise NondeterminismUnsupported("observation hoisting")
        if isinstance(s, While):
            return self.loop(s, f)
        raise TypeError(f"not a statement: {s!r}")

    def loop(self, s: While, f: Expectation) -> Tuple[Stmt, Expectation]:
        # the side expectation of a loop is the greatest fixpoint of
        # X -> [G]·h(body, X) + [!G]·f, and h(body, X) is the liberal pre-expectation
        pos = ex.bexp_guards(s.guard)
        neg = ex.bexp_guards(negate(s.guard))

        def functional(x, merge=True):
            inner = _Engine((True,), self.max_loop_iters, merge)
            (b,) = inner.run(s.body, x)
            out = ex.add(ex.guard_mul_cases(pos, b, merge), ex.guard_mul_cases(neg, f, merge), merge)
            return (out,), inner.exact

        (fix,), exact = solve_loop(functional, (ex.ONE,), self.max_loop_iters)
        if not exact:
            raise LoopFixpointNotFound(s, self.max_loop_iters)
        body, _ = self.run(s.body, fix)
        return While(s.guard, body), fix


def hoist(
    p: Union[Program, Stmt], f: Expectation = ex.ONE, max_loop_iters: int = DEFAULT_LOOP_ITERS
) -> HoistResult:
    """Observe-free program with adjusted branch probabilities, plus the side expectation."""
    body = p.body if isinstance(p, Program) else p
    if not is_fully_probabilistic(body):
        raise NondeterminismUnsupported("observation hoisting")
    prog, h = _Hoister(max_loop_iters).run(body, f)
    return HoistResult(prog, ex.simplify(h))


# --------------------------------------------------------------------------
# dead-branch elimination


def simplify_stmt(s: Stmt) -> Stmt:
    """Remove certain branches, identical branches and redundant skips."""
    if isinstance(s, Seq):
        items = [simplify_stmt(x) for x in seq_items(s)]
        items = [x for x in items if not isinstance(x, Skip)]
        return seq(*items)
    if isinstance(s, Ite):
        a, b = simplify_stmt(s.then), simplify_stmt(s.orelse)
        if isinstance(s.guard, BoolConst):
            return a if s.guard.value else b
        return a if a == b else Ite(s.guard, a, b)
    if isinstance(s, PChoice):
        a, b = simplify_stmt(s.left), simplify_stmt(s.right)
        if isinstance(s.prob, Const):
            if s.prob.value == 1:
                return a
            if s.prob.value == 0:
                return b
        return a if a == b else PChoice(a, s.prob, b)
    if isinstance(s, NDChoice):
        a, b = simplify_stmt(s.left), simplify_stmt(s.right)
        return a if a == b else NDChoice(a, b)
    if isinstance(s, While):
        return While(s.guard, simplify_stmt(s.body))
    if isinstance(s, Observe) and s.guard == BoolConst(True):
        return Skip()
    return s


# --------------------------------------------------------------------------
# observations to a rejection loop


def _rerun_set():
    return Cmp("=", Var(RERUN), IntConst(1))


def _rerun_clear():
    return Cmp("=", Var(RERUN), IntConst(0))


def _deobserve(s: Stmt) -> Stmt:
    if isinstance(s, Observe):
        return Ite(negate(s.guard), Assign(RERUN, IntConst(1)), Skip())
    if isinstance(s, Abort):
        return Ite(_rerun_clear(), s, Skip())
    if isinstance(s, While):
        return While(And(s.guard, _rerun_clear()), _deobserve(s.body))
    if isinstance(s, Seq):
        return Seq(_deobserve(s.first), _deobserve(s.second))
    if isinstance(s, Ite):
        return Ite(s.guard, _deobserve(s.then), _deobserve(s.orelse))
    if isinstance(s, PChoice):
        return PChoice(_deobserve(s.left), s.prob, _deobserve(s.right))
    if isinstance(s, NDChoice):
        return NDChoice(_deobserve(s.left), _deobserve(s.right))
    return s


def observe_to_loop(p: Union[Program, Stmt], variables: Iterable[str] = ()) -> Program:
    """Restart every run that violates an observation from the initial state.

    The initial values of the program variables are saved in fresh variables,
    restored at the start of each attempt, and the rerun flag is cleared
    before the attempt runs.
    """
    prog = p if isinstance(p, Program) else Program.from_stmt(p)
    names = list(dict.fromkeys([*variables, *prog.variables]))
    saves = [SAVE_PREFIX + str(i + 1) for i in range(len(names))]
    save = [Assign(s, Var(x)) for s, x in zip(saves, names)]
    restore = [Assign(x, Var(s)) for s, x in zip(saves, names)]
    loop = While(_rerun_set(), seq(*restore, Assign(RERUN, IntConst(0)), _deobserve(prog.body)))
    body = seq(*save, Assign(RERUN, IntConst(1)), loop)
    return Program(body, tuple(names) + tuple(saves) + (RERUN,), prog.params)


# --------------------------------------------------------------------------
# iid loops to observations


def iid_diagnose(loop: While, constants: Iterable[str] = ()) -> Optional[Tuple[str, str]]:
    """``None`` if the loop passes the syntactic iid check, else ``(culprit, reason)``.

    Every variable read in the body or guard must be assigned earlier in the
    same iteration on every path, so no value flows between iterations.
    Reads of ``constants`` (fixed parameters) are allowed.
    """
    constants = set(constants)
    for n in walk(loop.body):
        if isinstance(n, While):
            return "while", "nested loops are not supported"
        if isinstance(n, Abort):
            return "abort", "the body may abort"
        if isinstance(n, Observe):
            return "observe", "the body contains an observation"
        if isinstance(n, NDChoice):
            return "[]", "the body is nondeterministic"
        if isinstance(n, PChoice) and isinstance(n.prob, Quotient):
            return str(n.prob), "state-dependent probability"

    def check(names: Iterable[str], defined: Set[str], where: str):
        for v in names:
            if v not in defined and v not in constants:
                return v, f"{v} is read in {where} before it is assigned in the same iteration"
        return None

    def go(s: Stmt, defined: Set[str]):
        if isinstance(s, Skip):
            return defined, None
        if isinstance(s, Assign):
            bad = check(aexp_vars(s.expr), defined, f"'{s.var} := {s.expr}'")
            return defined | {s.var}, bad
        if isinstance(s, Seq):
            d, bad = go(s.first, defined)
            if bad:
                return d, bad
            return go(s.second, d)
        if isinstance(s, Ite):
            bad = check(bexp_vars(s.guard), defined, f"the condition '{s.guard}'")
            if bad:
                return defined, bad
            d1, bad = go(s.then, defined)
            if bad:
                return d1, bad
            d2, bad = go(s.orelse, defined)
            return d1 & d2, bad
        if isinstance(s, PChoice):
            d1, bad = go(s.left, defined)
            if bad:
                return d1, bad
            d2, bad = go(s.right, defined)
            return d1 & d2, bad
        raise TypeError(s)

    defined, bad = go(loop.body, set())
    if bad:
        return bad
    guard_vars = list(bexp_vars(loop.guard))
    bad = check(guard_vars, defined, f"the loop condition '{loop.guard}'")
    if bad:
        return bad[0], f"{bad[0]} in the loop condition is not assigned on every path of the body"
    if not any(v in defined for v in guard_vars):
        return str(loop.guard), "the loop condition does not depend on the body, so the loop runs once or forever"
    return None


def iid_check(loop: While, constants: Iterable[str] = ()) -> bool:
    return iid_diagnose(loop, constants) is None


def loop_to_observe(loop: While, constants: Iterable[str] = ()) -> Stmt:
    """``body; observe(!guard)`` for an iid loop."""
    bad = iid_diagnose(loop, constants)
    if bad:
        raise NotIid(*bad)
    return seq(loop.body, Observe(Not(loop.guard)))


def deloop_program(p: Program) -> Program:
    """Replace the top-level iid loops of a program by observations.

    Only loops at the top level are replaced: there every run passes the
    observation with the same probability, so the renormalization cancels.
    """
    items = seq_items(p.body)
    loops = [s for s in items if isinstance(s, While)]
    if not loops:
        raise NotIid("program", "there is no top-level loop to replace")
    out = [loop_to_observe(s, p.params) if isinstance(s, While) else s for s in items]
    return Program(seq(*out), p.variables, p.params)
