"""
Exact analysis of finite reward Markov chains and enumeration of schedulers
for reward MDPs whose nondeterminism is not on a cycle.

The cumulated reward of a finite path s0..sn is r(s0) + ... + r(s(n-1)): the
reward of a state is collected when it is left.  Terminal states lead to the
sink, so the expected reward of reaching the sink collects f at termination.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple, Union

import networkx as nx

from .errors import (
    BoundExceeded,
    BudgetExceeded,
    CyclicNondeterminism,
    InvariantError,
    NondeterminismUnsupported,
)
from .linalg import solve_sparse
from .operational import BAD_LABEL, SINK_LABEL, TERM, UNIQUE, Rmdp
from .values import UNDEFINED, AnalysisValue, Interval, order_key, quotient

DEFAULT_BUDGET = 20

Target = Union[str, Iterable[int]]


def _targets(m: Rmdp, target: Target) -> Set[int]:
    if isinstance(target, str):
        return set(m.states_with(target))
    return set(target)


def _chain(m: Rmdp, allow_frontier: bool = False) -> Dict[int, Tuple[Tuple[int, Fraction], ...]]:
    """Successor distributions of a fully probabilistic model."""
    if m.frontier and not allow_frontier:
        raise InvariantError("model has unexpanded frontier states; use bounded_conditional")
    nd = m.nondeterministic_states()
    if nd:
        raise NondeterminismUnsupported(f"exact solving of a model with nondeterministic state {nd[0]}")
    return {s: acts[UNIQUE] if UNIQUE in acts else next(iter(acts.values())) for s, acts in m.transitions.items() if acts}


def _solve(
    unknowns: Set[int],
    succ: Mapping[int, Tuple[Tuple[int, Fraction], ...]],
    const: Mapping[int, Fraction],
) -> Dict[int, Fraction]:
    """Solve x_s = const_s + sum over unknown t of P(s,t)·x_t, one SCC at a time."""
    g = nx.DiGraph()
    g.add_nodes_from(unknowns)
    for s in unknowns:
        for t, _ in succ.get(s, ()):
            if t in unknowns:
                g.add_edge(s, t)
    cond = nx.condensation(g)
    x: Dict[int, Fraction] = {}
    for c in reversed(list(nx.topological_sort(cond))):
        members = cond.nodes[c]["members"]
        rows: Dict[int, Dict[int, Fraction]] = {}
        rhs: Dict[int, Fraction] = {}
        for s in members:
            row = {s: Fraction(1)}
            b = Fraction(const.get(s, 0))
            for t, p in succ.get(s, ()):
                if t in members:
                    row[t] = row.get(t, 0) - p
                elif t in x:
                    b += p * x[t]
            rows[s] = {k: v for k, v in row.items() if v}
            rhs[s] = b
        if len(members) == 1:
            (s,) = members
            x[s] = rhs[s] / rows[s][s]
        else:
            x.update(solve_sparse(rows, rhs))
    return x


def _reach(
    m: Rmdp,
    succ: Mapping[int, Tuple[Tuple[int, Fraction], ...]],
    targets: Set[int],
    avoid: Set[int] = frozenset(),
) -> Dict[int, Fraction]:
    """Probability of reaching ``targets`` without visiting ``avoid`` first, per state."""
    pred: Dict[int, List[int]] = {}
    for s, dist in succ.items():
        for t, _ in dist:
            pred.setdefault(t, []).append(s)
    can = set(targets)
    stack = list(targets)
    while stack:
        t = stack.pop()
        for s in pred.get(t, ()):
            if s not in can and s not in avoid:
                can.add(s)
                stack.append(s)
    unknown = can - targets
    const = {s: sum((p for t, p in succ.get(s, ()) if t in targets), Fraction(0)) for s in unknown}
    x = {s: Fraction(0) for s in range(len(m.states))}
    x.update({s: Fraction(1) for s in targets})
    x.update(_solve(unknown, succ, const))
    return x


def _reward(
    m: Rmdp,
    succ: Mapping[int, Tuple[Tuple[int, Fraction], ...]],
    targets: Set[int],
    avoid: Set[int],
) -> Tuple[Dict[int, Fraction], Dict[int, Fraction]]:
    """Reach probabilities and expected rewards over paths reaching targets while avoiding ``avoid``."""
    x = _reach(m, succ, targets, avoid)
    live = {s for s, v in x.items() if v > 0 and s not in targets}
    z = {s: Fraction(0) for s in range(len(m.states))}
    z.update(_solve(live, succ, {s: x[s] * m.reward_of(s) for s in live}))
    return x, z


def reach_prob(m: Rmdp, target: Target = BAD_LABEL) -> Fraction:
    """Probability of eventually reaching ``target`` (a label or a set of state indices)."""
    succ = _chain(m)
    return _reach(m, succ, _targets(m, target))[m.initial]


def expected_reward(m: Rmdp, target: Target = SINK_LABEL, avoid: Target = ()) -> Fraction:
    """Expected reward collected on paths that reach ``target`` without visiting ``avoid``."""
    succ = _chain(m)
    _, z = _reward(m, succ, _targets(m, target), _targets(m, avoid))
    return z[m.initial]


def _check_bound(m: Rmdp, bound: Fraction) -> None:
    for s, r in m.rewards.items():
        if r > bound:
            raise BoundExceeded(r, bound, f"reward of state {s}")


def liberal_expected_reward(m: Rmdp, target: Target = SINK_LABEL) -> Fraction:
    """Expected reward plus the probability of never reaching ``target``; rewards must be at most 1."""
    _check_bound(m, Fraction(1))
    succ = _chain(m)
    t = _targets(m, target)
    _, z = _reward(m, succ, t, set())
    return z[m.initial] + 1 - _reach(m, succ, t)[m.initial]


def conditional_parts(m: Rmdp, liberal: bool = False) -> Tuple[Fraction, Fraction]:
    """Numerator and denominator of the conditional expected reward."""
    succ = _chain(m)
    sink, bad = set(m.states_with(SINK_LABEL)), set(m.states_with(BAD_LABEL))
    _, z = _reward(m, succ, sink, bad)
    num = z[m.initial]
    if liberal:
        _check_bound(m, Fraction(1))
        num += 1 - _reach(m, succ, sink | bad)[m.initial]
    den = 1 - _reach(m, succ, bad)[m.initial]
    return num, den


def conditional_expected_reward(m: Rmdp, liberal: bool = False) -> AnalysisValue:
    """Expected reward to the sink conditioned on never reaching a bad state."""
    num, den = conditional_parts(m, liberal)
    return quotient(num, den)


def bounded_conditional(m: Rmdp, post_bound: Fraction) -> AnalysisValue:
    """Sound interval for the conditional expected reward of a partially explored model.

    Frontier states are treated as absorbing; their mass ``u`` may end up
    anywhere, with reward at most ``post_bound`` on termination.
    """
    post_bound = Fraction(post_bound)
    _check_bound(m, post_bound)
    for s in m.rewards:
        if m.rewards[s] and TERM not in m.label_of(s):
            raise InvariantError(f"state {s}: reward on a non-terminal state")
    succ = _chain(m, allow_frontier=True)
    sink, bad = set(m.states_with(SINK_LABEL)), set(m.states_with(BAD_LABEL))
    _, z = _reward(m, succ, sink, bad)
    lo_num = z[m.initial]
    lo_bad = _reach(m, succ, bad)[m.initial]
    u = _reach(m, succ, set(m.frontier))[m.initial] if m.frontier else Fraction(0)
    hi_den = 1 - lo_bad
    if hi_den == 0:
        return UNDEFINED
    lo = lo_num / hi_den
    lo_den = hi_den - u
    hi = post_bound if lo_den <= 0 else min(post_bound, (lo_num + u * post_bound) / lo_den)
    if u == 0:
        hi = lo
    return Interval(lo, max(lo, hi))


def _check_acyclic(m: Rmdp) -> None:
    g = nx.DiGraph()
    g.add_nodes_from(range(len(m.states)))
    for s in range(len(m.states)):
        for t in m.successors(s):
            g.add_edge(s, t)
    nd = set(m.nondeterministic_states())
    for comp in nx.strongly_connected_components(g):
        cyclic = len(comp) > 1 or any(g.has_edge(s, s) for s in comp)
        if cyclic and comp & nd:
            raise CyclicNondeterminism(f"nondeterministic state {min(comp & nd)} lies on a cycle")


def schedulers(m: Rmdp) -> Iterable[Dict[int, str]]:
    """All deterministic action assignments, in lexicographic order with left first."""
    nd = m.nondeterministic_states()
    options = [sorted(m.transitions[s], key=lambda a: (a != "left", a)) for s in nd]
    for combo in itertools.product(*options):
        yield dict(zip(nd, combo))


def min_conditional(
    m: Rmdp, liberal: bool = False, budget: int = DEFAULT_BUDGET
) -> Tuple[AnalysisValue, Dict[int, str]]:
    """Demonic minimum of the conditional expected reward; Undefined lies below every number."""
    if m.frontier:
        raise InvariantError("model has unexpanded frontier states")
    nd = m.nondeterministic_states()
    if len(nd) > budget:
        raise BudgetExceeded(f"{len(nd)} nondeterministic states exceed the enumeration budget {budget}")
    _check_acyclic(m)
    best: Optional[Tuple[AnalysisValue, Dict[int, str]]] = None
    for choice in schedulers(m):
        v = conditional_expected_reward(m.induce(choice), liberal)
        if best is None or order_key(v) < order_key(best[0]):
            best = (v, choice)
    return best


def scheduler_values(m: Rmdp, liberal: bool = False) -> List[Tuple[Dict[int, str], AnalysisValue]]:
    """Conditional value of every deterministic scheduler."""
    return [(c, conditional_expected_reward(m.induce(c), liberal)) for c in schedulers(m)]


def converge(builder, post_bound: Fraction, tol: Fraction, max_states: int = 200_000, start: int = 256):
    """Grow a partial model until its conditional interval is narrower than ``tol``.

    Returns ``(value, model)``; the value is exact once exploration closes.
    """
    size = start
    while True:
        m = builder.expand(size)
        if builder.complete:
            return conditional_expected_reward(m), m
        v = bounded_conditional(m, post_bound)
        if v is not UNDEFINED and v.width < tol:
            return v, m
        if size >= max_states:
            return v, m
        size = min(2 * size, max_states)
