"""Seeded random generators for programs, expectations, states and models."""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Dict, Sequence

from . import expectation as ex
from .operational import BAD_LABEL, LEFT, RIGHT, SINK_LABEL, TERM, UNIQUE, Named, Rmdp
from .syntax import (
    Abort,
    And,
    Assign,
    BinOp,
    BoolConst,
    Cmp,
    CMP_OPS,
    Const,
    IntConst,
    Ite,
    NDChoice,
    Not,
    Observe,
    Or,
    Param,
    PChoice,
    Program,
    Skip,
    Var,
    While,
    seq,
)

VARS = ("x", "y", "z", "w")
PROBS = tuple(Fraction(a, b) for a, b in [(1, 2), (1, 3), (2, 3), (1, 4), (3, 4), (1, 5), (4, 5), (0, 1), (1, 1)])
LO, HI = -3, 3


def rng_for(seed: int, index: int = 0) -> random.Random:
    """Independent stream for instance ``index`` of a suite seeded with ``seed``."""
    return random.Random(seed * 1_000_003 + index)


def gen_aexp(rng: random.Random, names: Sequence[str], depth: int = 2):
    if depth <= 0 or rng.random() < 0.4:
        if names and rng.random() < 0.6:
            return Var(rng.choice(names))
        return IntConst(rng.randint(LO, HI))
    op = rng.choice("++-*")
    left = gen_aexp(rng, names, depth - 1)
    if op == "*":
        right = IntConst(rng.randint(LO, HI))
    else:
        right = gen_aexp(rng, names, depth - 1)
    return BinOp(op, left, right)


def gen_bexp(rng: random.Random, names: Sequence[str], depth: int = 2):
    r = rng.random()
    if depth <= 0 or r < 0.55:
        if rng.random() < 0.05:
            return BoolConst(rng.random() < 0.5)
        return Cmp(rng.choice(CMP_OPS), gen_aexp(rng, names, 1), gen_aexp(rng, names, 1))
    if r < 0.7:
        return Not(gen_bexp(rng, names, depth - 1))
    cls = And if rng.random() < 0.5 else Or
    return cls(gen_bexp(rng, names, depth - 1), gen_bexp(rng, names, depth - 1))


def gen_prob(rng: random.Random, params: Sequence[str] = ()):
    if params and rng.random() < 0.3:
        return Param(rng.choice(params))
    return Const(rng.choice(PROBS))


def gen_stmt(
    rng: random.Random,
    names: Sequence[str],
    depth: int = 6,
    loops: bool = False,
    nondet: bool = False,
    observe: bool = True,
    abort: bool = True,
    params: Sequence[str] = (),
):
    """Random statement of nesting depth at most ``depth``."""
    def leaf():
        r = rng.random()
        if observe and r < 0.25:
            return Observe(gen_bexp(rng, names, 1))
        if abort and r < 0.29:
            return Abort()
        if r < 0.35:
            return Skip()
        return Assign(rng.choice(names), gen_aexp(rng, names, 2))

    def go(d):
        if d <= 1 or rng.random() < 0.3:
            return leaf()
        kinds = ["seq", "seq", "ite", "prob", "prob"]
        if nondet:
            kinds.append("nd")
        if loops:
            kinds.append("while")
        k = rng.choice(kinds)
        if k == "seq":
            return seq(go(d - 1), go(d - 1))
        if k == "ite":
            return Ite(gen_bexp(rng, names, 1), go(d - 1), go(d - 1))
        if k == "prob":
            return PChoice(go(d - 1), gen_prob(rng, params), go(d - 1))
        if k == "nd":
            return NDChoice(go(d - 1), go(d - 1))
        return gen_loop(rng, names, d)

    return go(depth)


def gen_loop(rng: random.Random, names: Sequence[str], depth: int = 3) -> While:
    """A loop over a counter that moves randomly within a small window."""
    x = rng.choice(names)
    lo, hi = sorted(rng.sample(range(LO, HI + 1), 2))
    step_up = Assign(x, BinOp("+", Var(x), IntConst(1)))
    step_down = Assign(x, BinOp("-", Var(x), IntConst(1)))
    move = PChoice(step_up, Const(rng.choice(PROBS[:7])), rng.choice([step_down, Skip()]))
    others = [n for n in names if n != x]
    extra = [] if not others or depth <= 2 else [
        gen_stmt(rng, others, 2, observe=False, abort=False)
    ]
    guard = And(Cmp("<=", IntConst(lo), Var(x)), Cmp("<", Var(x), IntConst(hi)))
    return While(guard, seq(move, *extra))


def gen_program(
    rng: random.Random,
    n_vars: int = None,
    depth: int = 6,
    loops: bool = False,
    nondet: bool = False,
    observe: bool = True,
    abort: bool = True,
    params: Sequence[str] = (),
) -> Program:
    n = n_vars or rng.randint(1, len(VARS))
    names = VARS[:n]
    body = gen_stmt(rng, names, depth, loops, nondet, observe, abort, params)
    return Program.from_stmt(body, extra_vars=names)


def gen_loopy_program(rng: random.Random) -> Program:
    names = VARS[: rng.randint(1, 2)]
    pre = gen_stmt(rng, names, 2, observe=False, abort=False)
    body = seq(pre, gen_loop(rng, names, 2))
    return Program.from_stmt(body, extra_vars=names)


def gen_state(rng: random.Random, names: Sequence[str]) -> Dict[str, int]:
    return {v: rng.randint(LO, HI) for v in names}


def gen_expectation(rng: random.Random, names: Sequence[str], bounded: bool = False) -> ex.Expectation:
    """Random nonnegative guarded polynomial; at most 1 everywhere if ``bounded``."""
    terms = rng.randint(1, 3)
    f = ex.ZERO
    weights = [Fraction(rng.randint(0, 4), 4) for _ in range(terms)]
    if bounded:
        total = sum(weights) or Fraction(1)
        weights = [w / total if total > 1 else w for w in weights]
    for w in weights:
        guard = gen_bexp(rng, names, 1)
        if bounded or rng.random() < 0.5:
            term = ex.const(w)
        else:
            v = rng.choice(names)
            kind = rng.random()
            if kind < 0.5:
                term = ex.mul(ex.from_aexp(Var(v)), ex.from_aexp(Var(v)))
            else:
                # (v - lo) is nonnegative under the guard lo <= v
                lo = rng.randint(LO, HI)
                term = ex.guard_mul(Cmp("<=", IntConst(lo), Var(v)), ex.from_aexp(BinOp("-", Var(v), IntConst(lo))))
            term = ex.scale(w or 1, term)
        f = ex.add(f, ex.guard_mul(guard, term))
    return ex.simplify(f)


def gen_model(rng: random.Random, n_states: int = None) -> Rmdp:
    """Random well-formed explicit model with terminal, bad and sink states."""
    n = n_states or rng.randint(3, 12)
    m = Rmdp([Named(f"s{i}") for i in range(n)], 0)
    sink, bad = n - 1, n - 2
    m.labels[sink] = frozenset({SINK_LABEL})
    m.labels[bad] = frozenset({BAD_LABEL})
    m.transitions[sink] = {UNIQUE: ((sink, Fraction(1)),)}
    m.transitions[bad] = {UNIQUE: ((sink, Fraction(1)),)}
    frontier = set()
    for s in range(n - 2):
        r = rng.random()
        if r < 0.25:
            m.labels[s] = frozenset({TERM})
            reward = Fraction(rng.randint(0, 12), rng.randint(1, 4))
            if reward:
                m.rewards[s] = reward
            m.transitions[s] = {UNIQUE: ((sink, Fraction(1)),)}
            continue
        if s and r < 0.3:
            frontier.add(s)
            continue
        actions = [LEFT, RIGHT] if r > 0.85 else [UNIQUE]
        m.transitions[s] = {a: _distribution(rng, n) for a in actions}
    m.frontier = frozenset(frontier)
    m.check()
    return m


def _distribution(rng: random.Random, n: int):
    k = rng.randint(1, min(3, n))
    targets = rng.sample(range(n), k)
    weights = [rng.randint(1, 5) for _ in targets]
    total = sum(weights)
    return tuple((t, Fraction(w, total)) for t, w in zip(targets, weights))


def gen_ast(rng: random.Random) -> Program:
    """Random program using every construct, for parser round trips."""
    names = VARS[: rng.randint(1, 4)]
    body = gen_stmt(rng, names, rng.randint(1, 6), loops=True, nondet=True, params=("p", "q"))
    return Program.from_stmt(body, extra_vars=names)

