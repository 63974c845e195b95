"""
Operational semantics: the reward MDP of a program, built by breadth-first
application of the small-step rules.

States are configurations ``Conf(stmt, sigma)``, terminal states
``Term(sigma)``, the violation state ``BAD`` and the absorbing ``SINK``.
Inside configurations the marker :data:`DOWN` stands for a finished statement,
so ``Conf(Seq(DOWN, Q), sigma)`` is the intermediate state that continues with Q.
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

from . import expectation as ex
from .errors import (
    EvaluationError,
    FormatError,
    InvariantError,
    UninstantiatedParameter,
)
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
    eval_aexp,
    eval_bexp,
    format_rational,
    one_line,
)

LEFT, RIGHT, UNIQUE = "left", "right", "unique"
ACTIONS = (LEFT, RIGHT, UNIQUE)
TERM, BAD_LABEL, SINK_LABEL = "term", "bad", "sink"
LABELS = (TERM, BAD_LABEL, SINK_LABEL)


@dataclass(frozen=True)
class _Down:
    def __str__(self):
        return "↓"


DOWN = _Down()

Valuation = Tuple[Tuple[str, int], ...]


def _sigma_str(sigma: Valuation) -> str:
    return "{" + ", ".join(f"{k}={v}" for k, v in sigma) + "}"


@dataclass(frozen=True)
class Conf:
    stmt: object  # Stmt, or Seq whose leftmost leaf is DOWN
    sigma: Valuation

    def __str__(self):
        return f"<{_stmt_str(self.stmt)}, {_sigma_str(self.sigma)}>"


@dataclass(frozen=True)
class Term:
    sigma: Valuation

    def __str__(self):
        return f"<↓, {_sigma_str(self.sigma)}>"


@dataclass(frozen=True)
class _Bad:
    def __str__(self):
        return "<bad>"


@dataclass(frozen=True)
class _Sink:
    def __str__(self):
        return "<sink>"


@dataclass(frozen=True)
class Named:
    """A state of an explicitly given model."""

    name: str

    def __str__(self):
        return self.name


BAD = _Bad()
SINK = _Sink()

OpState = Union[Conf, Term, _Bad, _Sink, Named]


def _stmt_str(s) -> str:
    if s is DOWN:
        return "↓"
    if isinstance(s, Seq) and (s.first is DOWN or isinstance(s.first, Seq)):
        return f"{_stmt_str(s.first)}; {_stmt_str(s.second)}"
    return one_line(s)


Distribution = Tuple[Tuple[int, Fraction], ...]


@dataclass
class Rmdp:
    """Explicit reward MDP.

    ``transitions[s]`` maps each enabled action of state ``s`` to a distribution
    of ``(successor, probability)`` pairs.  States in ``frontier`` were
    discovered but not expanded and have no transitions.
    """

    states: List[OpState] = field(default_factory=list)
    initial: int = 0
    transitions: Dict[int, Dict[str, Distribution]] = field(default_factory=dict)
    labels: Dict[int, FrozenSet[str]] = field(default_factory=dict)
    rewards: Dict[int, Fraction] = field(default_factory=dict)
    frontier: FrozenSet[int] = frozenset()

    def __len__(self):
        return len(self.states)

    def label_of(self, s: int) -> FrozenSet[str]:
        return self.labels.get(s, frozenset())

    def reward_of(self, s: int) -> Fraction:
        return self.rewards.get(s, Fraction(0))

    def states_with(self, label: str) -> List[int]:
        return [s for s in range(len(self.states)) if label in self.label_of(s)]

    def actions(self, s: int) -> List[str]:
        return list(self.transitions.get(s, {}))

    def nondeterministic_states(self) -> List[int]:
        return [s for s in range(len(self.states)) if len(self.transitions.get(s, {})) > 1]

    def is_fully_probabilistic(self) -> bool:
        return not self.nondeterministic_states()

    def successors(self, s: int) -> List[int]:
        out = []
        for dist in self.transitions.get(s, {}).values():
            for t, _ in dist:
                if t not in out:
                    out.append(t)
        return out

    def edge_count(self) -> int:
        return sum(len(d) for acts in self.transitions.values() for d in acts.values())

    def induce(self, choice: Mapping[int, str]) -> "Rmdp":
        """The chain obtained by fixing the action of each nondeterministic state."""
        trans = {}
        for s, acts in self.transitions.items():
            if len(acts) > 1:
                a = choice[s]
                trans[s] = {UNIQUE: acts[a]}
            else:
                trans[s] = dict(acts)
        return Rmdp(list(self.states), self.initial, trans, dict(self.labels), dict(self.rewards), self.frontier)

    def with_initial(self, start: int) -> "Rmdp":
        """The sub-model reachable from ``start``, re-indexed in BFS order."""
        order = [start]
        index = {start: 0}
        queue = deque([start])
        while queue:
            s = queue.popleft()
            for t in self.successors(s):
                if t not in index:
                    index[t] = len(order)
                    order.append(t)
                    queue.append(t)
        trans = {
            index[s]: {a: tuple((index[t], p) for t, p in d) for a, d in self.transitions[s].items()}
            for s in order
            if s in self.transitions
        }
        return Rmdp(
            [self.states[s] for s in order],
            0,
            trans,
            {index[s]: self.labels[s] for s in order if s in self.labels},
            {index[s]: self.rewards[s] for s in order if s in self.rewards},
            frozenset(index[s] for s in self.frontier if s in index),
        )

    def check(self) -> None:
        """Raise InvariantError unless distributions and labels are well formed."""
        n = len(self.states)
        if not 0 <= self.initial < n:
            raise InvariantError(f"initial state {self.initial} out of range")
        for s, acts in self.transitions.items():
            if s in self.frontier:
                raise InvariantError(f"frontier state {s} has transitions")
            for a, dist in acts.items():
                if a not in ACTIONS:
                    raise InvariantError(f"state {s}: unknown action {a!r}")
                total = Fraction(0)
                for t, p in dist:
                    if not 0 <= t < n:
                        raise InvariantError(f"state {s}: dangling successor {t}")
                    if p <= 0:
                        raise InvariantError(f"state {s}: nonpositive probability {p}")
                    total += p
                if total != 1:
                    raise InvariantError(f"state {s}, action {a}: probabilities sum to {total}")
        for s in range(n):
            if s not in self.frontier and not self.transitions.get(s):
                raise InvariantError(f"state {s} has no enabled action")
            labels = self.label_of(s)
            if not labels <= set(LABELS):
                raise InvariantError(f"state {s}: unknown labels {sorted(labels - set(LABELS))}")
            if TERM in labels and BAD_LABEL in labels:
                raise InvariantError(f"state {s} is both terminal and bad")
            r = self.reward_of(s)
            if r < 0:
                raise InvariantError(f"state {s}: negative reward")
            if r > 0 and TERM not in labels:
                raise InvariantError(f"state {s}: positive reward on a non-terminal state")


# --------------------------------------------------------------------------
# small-step rules

Outcome = Tuple[object, Optional[Valuation]]  # (stmt-or-DOWN, sigma) or (BAD, None)


def _update(sigma: Valuation, name: str, value: int) -> Valuation:
    return tuple((k, value if k == name else v) for k, v in sigma)


def _probability(prob, env: Mapping[str, int]) -> Fraction:
    if isinstance(prob, Const):
        return prob.value
    if isinstance(prob, Param):
        raise UninstantiatedParameter(prob.name)
    if isinstance(prob, Quotient):
        num = ex.eval_exp(prob.num, env)
        den = ex.eval_exp(prob.den, env)
        if den == 0:
            raise EvaluationError(f"probability {prob} has a zero denominator at {env}")
        p = Fraction(num) / Fraction(den)
        if not 0 <= p <= 1:
            raise EvaluationError(f"probability {prob} evaluates to {p} at {env}")
        return p
    raise TypeError(prob)


def step(stmt, sigma: Valuation) -> List[Tuple[str, List[Tuple[Outcome, Fraction]]]]:
    """Enabled actions of ``<stmt, sigma>`` and their outcome distributions."""
    env = dict(sigma)
    if isinstance(stmt, Skip):
        return [(UNIQUE, [((DOWN, sigma), Fraction(1))])]
    if isinstance(stmt, Abort):
        return [(UNIQUE, [((stmt, sigma), Fraction(1))])]
    if isinstance(stmt, Assign):
        value = eval_aexp(stmt.expr, env)
        return [(UNIQUE, [((DOWN, _update(sigma, stmt.var, value)), Fraction(1))])]
    if isinstance(stmt, Observe):
        if eval_bexp(stmt.guard, env):
            return [(UNIQUE, [((DOWN, sigma), Fraction(1))])]
        return [(UNIQUE, [((BAD, None), Fraction(1))])]
    if isinstance(stmt, Seq):
        if stmt.first is DOWN:
            return [(UNIQUE, [((stmt.second, sigma), Fraction(1))])]
        out = []
        for action, dist in step(stmt.first, sigma):
            lifted = []
            for (s2, tau), p in dist:
                lifted.append(((BAD, None) if s2 is BAD else (Seq(s2, stmt.second), tau), p))
            out.append((action, lifted))
        return out
    if isinstance(stmt, Ite):
        branch = stmt.then if eval_bexp(stmt.guard, env) else stmt.orelse
        return [(UNIQUE, [((branch, sigma), Fraction(1))])]
    if isinstance(stmt, While):
        if eval_bexp(stmt.guard, env):
            return [(UNIQUE, [((Seq(stmt.body, stmt), sigma), Fraction(1))])]
        return [(UNIQUE, [((DOWN, sigma), Fraction(1))])]
    if isinstance(stmt, PChoice):
        p = _probability(stmt.prob, env)
        dist = [((stmt.left, sigma), p), ((stmt.right, sigma), 1 - p)]
        return [(UNIQUE, dist)]
    if isinstance(stmt, NDChoice):
        return [(LEFT, [((stmt.left, sigma), Fraction(1))]), (RIGHT, [((stmt.right, sigma), Fraction(1))])]
    raise TypeError(f"cannot step {stmt!r}")


def _to_state(outcome: Outcome) -> OpState:
    s, tau = outcome
    if s is BAD:
        return BAD
    if s is DOWN:
        return Term(tau)
    return Conf(s, tau)


def complete_state(program: Program, state: Mapping[str, int], extra: Iterable[str] = ()) -> Dict[str, int]:
    """Total valuation over the program variables and ``extra``; unmentioned variables are 0."""
    out = {v: int(state.get(v, 0)) for v in [*program.variables, *extra]}
    for k, v in state.items():
        out.setdefault(k, int(v))
    return out


class ModelBuilder:
    """Incremental breadth-first construction of the operational model.

    Calling :meth:`expand` with a larger budget continues the same exploration,
    so smaller models are always prefixes of larger ones.
    """

    def __init__(self, program: Union[Program, Stmt], state: Mapping[str, int], f: ex.Expectation = ex.ZERO):
        if not isinstance(program, Program):
            program = Program.from_stmt(program)
        if program.params:
            raise UninstantiatedParameter(program.params[0])
        self.program = program
        self.f = f
        env = complete_state(program, state, ex.variables(f))
        sigma = tuple(sorted(env.items()))
        self.model = Rmdp()
        self.index: Dict[OpState, int] = {}
        self.queue: deque = deque()
        self._add(Conf(program.body, sigma))
        self.model.frontier = frozenset(self.queue)

    def _add(self, st: OpState) -> int:
        i = self.index.get(st)
        if i is not None:
            return i
        i = len(self.model.states)
        self.index[st] = i
        self.model.states.append(st)
        if isinstance(st, Term):
            self.model.labels[i] = frozenset({TERM})
            r = ex.eval_exp(self.f, dict(st.sigma))
            if r == ex.INF:
                raise EvaluationError(f"post-expectation is infinite at {dict(st.sigma)}")
            if r:
                self.model.rewards[i] = r
        elif st is BAD:
            self.model.labels[i] = frozenset({BAD_LABEL})
        elif st is SINK:
            self.model.labels[i] = frozenset({SINK_LABEL})
        self.queue.append(i)
        return i

    def _expand_one(self, i: int) -> None:
        st = self.model.states[i]
        if isinstance(st, (Term, _Bad, _Sink)):
            self.model.transitions[i] = {UNIQUE: ((self._add(SINK), Fraction(1)),)}
            return
        acts = {}
        for action, dist in step(st.stmt, st.sigma):
            merged: Dict[int, Fraction] = {}
            for outcome, p in dist:
                if p == 0:
                    continue
                j = self._add(_to_state(outcome))
                merged[j] = merged.get(j, 0) + p
            acts[action] = tuple(merged.items())
        self.model.transitions[i] = acts

    def expand(self, max_states: Optional[int] = None) -> Rmdp:
        while self.queue and (max_states is None or len(self.model.states) < max_states):
            self._expand_one(self.queue.popleft())
        self.model.frontier = frozenset(self.queue)
        return self.model

    @property
    def complete(self) -> bool:
        return not self.queue


def build(
    program: Union[Program, Stmt],
    state: Mapping[str, int],
    f: ex.Expectation = ex.ZERO,
    max_states: Optional[int] = 100_000,
) -> Rmdp:
    """Operational model of ``program`` from ``state`` with terminal rewards ``f``."""
    return ModelBuilder(program, state, f).expand(max_states)


def find_state(m: Rmdp, predicate) -> int:
    for i, st in enumerate(m.states):
        if predicate(st):
            return i
    raise KeyError("no matching state")


# --------------------------------------------------------------------------
# export


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(m: Rmdp) -> str:
    """Deterministic DOT rendering (nodes and edges sorted by state index)."""
    lines = ["digraph rmdp {", "  rankdir=TB;", '  node [shape=box, fontname="monospace"];']
    for i, st in enumerate(m.states):
        parts = [str(st)]
        labels = m.label_of(i)
        if labels:
            parts.append("{" + ", ".join(sorted(labels)) + "}")
        r = m.reward_of(i)
        if r:
            parts.append(f"reward {format_rational(r)}")
        attrs = f'label="{_dot_escape(chr(10).join(parts))}"'.replace("\n", "\\n")
        if i == m.initial:
            attrs += ", penwidth=2"
        if i in m.frontier:
            attrs += ", style=dashed"
        lines.append(f"  s{i} [{attrs}];")
    for i in range(len(m.states)):
        for action, dist in m.transitions.get(i, {}).items():
            for j, p in dist:
                label = format_rational(p) if action == UNIQUE else f"{action}: {format_rational(p)}"
                style = ", style=dotted" if action != UNIQUE else ""
                lines.append(f'  s{i} -> s{j} [label="{label}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# explicit text format

_HEADER = re.compile(r"states\s+(\d+)\s+initial\s+(\d+)\Z")
_STATE = re.compile(r"state\s+(\d+)\s+labels\s+\{([^}]*)\}\s+reward\s+(\S+)\Z")
_TRANS = re.compile(r"trans\s+(\d+)\s+(\w+)\s+\{([^}]*)\}\Z")
_FRONTIER = re.compile(r"frontier\s+\{([^}]*)\}\Z")


def _rational(text: str, line: int) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"not a rational number: {text.strip()!r}", line) from None


def load_explicit(text: str) -> Rmdp:
    """Parse and validate the line-oriented explicit model format."""
    m: Optional[Rmdp] = None
    frontier: set = set()
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].split("//", 1)[0].strip()
        if not line:
            continue
        if m is None:
            h = _HEADER.match(line)
            if not h:
                raise FormatError("expected header 'states N initial I'", no)
            n = int(h.group(1))
            m = Rmdp([Named(f"s{i}") for i in range(n)], int(h.group(2)))
            continue
        n = len(m.states)
        st = _STATE.match(line)
        tr = _TRANS.match(line)
        fr = _FRONTIER.match(line)
        if st:
            i = int(st.group(1))
            if i >= n:
                raise InvariantError(f"line {no}: state index {i} out of range")
            labels = frozenset(x.strip() for x in st.group(2).split(",") if x.strip())
            if labels:
                m.labels[i] = labels
            r = _rational(st.group(3), no)
            if r:
                m.rewards[i] = r
        elif tr:
            i, action = int(tr.group(1)), tr.group(2)
            if i >= n:
                raise InvariantError(f"line {no}: state index {i} out of range")
            if action not in ACTIONS:
                raise FormatError(f"unknown action {action!r}", no)
            dist: Dict[int, Fraction] = {}
            for item in filter(None, (x.strip() for x in tr.group(3).split(","))):
                if ":" not in item:
                    raise FormatError(f"expected 'index:probability', found {item!r}", no)
                t, p = item.split(":", 1)
                try:
                    j = int(t)
                except ValueError:
                    raise FormatError(f"bad state index {t!r}", no) from None
                dist[j] = dist.get(j, 0) + _rational(p, no)
            if action in m.transitions.get(i, {}):
                raise FormatError(f"duplicate transition for state {i}, action {action}", no)
            m.transitions.setdefault(i, {})[action] = tuple(dist.items())
        elif fr:
            frontier = {int(x) for x in fr.group(1).split(",") if x.strip()}
        else:
            raise FormatError(f"unrecognized line {line!r}", no)
    if m is None:
        raise FormatError("empty model", 0)
    m.frontier = frozenset(frontier)
    m.check()
    return m


def save_explicit(m: Rmdp) -> str:
    """Canonical text of ``m``: states in index order, actions in fixed order."""
    out = [f"states {len(m.states)} initial {m.initial}"]
    for i in range(len(m.states)):
        labels = ", ".join(sorted(m.label_of(i)))
        out.append(f"state {i} labels {{{labels}}} reward {format_rational(m.reward_of(i))}")
    for i in range(len(m.states)):
        acts = m.transitions.get(i, {})
        for a in ACTIONS:
            if a in acts:
                body = ", ".join(f"{j}:{format_rational(p)}" for j, p in sorted(acts[a]))
                out.append(f"trans {i} {a} {{ {body} }}")
    if m.frontier:
        out.append("frontier {" + ", ".join(str(s) for s in sorted(m.frontier)) + "}")
    return "\n".join(out) + "\n"


def canonical(text: str) -> str:
    return save_explicit(load_explicit(text))
