"""
Abstract syntax of cpGCL, a probabilistic guarded command language with
``observe`` statements, together with the pretty-printer and static checks.

All nodes are frozen dataclasses, so programs are hashable values and can be
used directly inside operational configurations.

Sequences are kept right-nested: build them with :func:`seq`, which flattens
and re-nests its arguments, so that ``parse(pretty_print(p)) == p`` holds.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Tuple, Union
import re

RESERVED_PREFIX = "__"
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
KEYWORDS = frozenset(
    {"skip", "abort", "if", "else", "while", "observe", "true", "false", "min", "inf"}
)


# --------------------------------------------------------------------------
# arithmetic expressions


@dataclass(frozen=True)
class IntConst:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


ARITH_PREC = {"+": 1, "-": 1, "*": 2}


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - *
    left: "AExp"
    right: "AExp"

    def __str__(self):
        prec = ARITH_PREC[self.op]
        lhs = _paren_arith(self.left, prec, strict=False)
        rhs = _paren_arith(self.right, prec, strict=True)
        return f"{lhs} {self.op} {rhs}"


AExp = Union[IntConst, Var, BinOp]


def _paren_arith(e, prec, strict):
    if isinstance(e, BinOp):
        inner = ARITH_PREC[e.op]
        if inner < prec or (strict and inner == prec):
            return f"({e})"
    return str(e)


def add(a, b):
    return BinOp("+", a, b)


def sub(a, b):
    return BinOp("-", a, b)


def mul(a, b):
    return BinOp("*", a, b)


def eval_aexp(e: AExp, state: Mapping[str, int]) -> int:
    if isinstance(e, IntConst):
        return e.value
    if isinstance(e, Var):
        try:
            return state[e.name]
        except KeyError:
            raise KeyError(f"variable {e.name!r} has no value") from None
    l = eval_aexp(e.left, state)
    r = eval_aexp(e.right, state)
    if e.op == "+":
        return l + r
    if e.op == "-":
        return l - r
    return l * r


def aexp_vars(e: AExp) -> Iterator[str]:
    if isinstance(e, Var):
        yield e.name
    elif isinstance(e, BinOp):
        yield from aexp_vars(e.left)
        yield from aexp_vars(e.right)


def subst_aexp(e: AExp, mapping: Mapping[str, AExp]) -> AExp:
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, BinOp):
        return BinOp(e.op, subst_aexp(e.left, mapping), subst_aexp(e.right, mapping))
    return e


# --------------------------------------------------------------------------
# boolean expressions

CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
NEGATED_CMP = {"=": "!=", "!=": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


@dataclass(frozen=True)
class BoolConst:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Cmp:
    op: str
    left: AExp
    right: AExp

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class And:
    left: "BExp"
    right: "BExp"

    def __str__(self):
        return f"{_paren_bool(self.left, 2, False)} && {_paren_bool(self.right, 2, True)}"


@dataclass(frozen=True)
class Or:
    left: "BExp"
    right: "BExp"

    def __str__(self):
        return f"{_paren_bool(self.left, 1, False)} || {_paren_bool(self.right, 1, True)}"


@dataclass(frozen=True)
class Not:
    operand: "BExp"

    def __str__(self):
        return f"!({self.operand})"


BExp = Union[BoolConst, Cmp, And, Or, Not]


def _paren_bool(e, prec, strict):
    inner = {Or: 1, And: 2}.get(type(e))
    if inner is not None and (inner < prec or (strict and inner == prec)):
        return f"({e})"
    return str(e)


TRUE = BoolConst(True)
FALSE = BoolConst(False)


def eval_bexp(e: BExp, state: Mapping[str, int]) -> bool:
    if isinstance(e, BoolConst):
        return e.value
    if isinstance(e, Cmp):
        l = eval_aexp(e.left, state)
        r = eval_aexp(e.right, state)
        return {
            "=": l == r,
            "!=": l != r,
            "<": l < r,
            "<=": l <= r,
            ">": l > r,
            ">=": l >= r,
        }[e.op]
    if isinstance(e, And):
        return eval_bexp(e.left, state) and eval_bexp(e.right, state)
    if isinstance(e, Or):
        return eval_bexp(e.left, state) or eval_bexp(e.right, state)
    return not eval_bexp(e.operand, state)


def negate(e: BExp) -> BExp:
    """Logical negation, pushed into comparisons and double negations."""
    if isinstance(e, BoolConst):
        return BoolConst(not e.value)
    if isinstance(e, Cmp):
        return Cmp(NEGATED_CMP[e.op], e.left, e.right)
    if isinstance(e, Not):
        return e.operand
    return Not(e)


def bexp_vars(e: BExp) -> Iterator[str]:
    if isinstance(e, Cmp):
        yield from aexp_vars(e.left)
        yield from aexp_vars(e.right)
    elif isinstance(e, (And, Or)):
        yield from bexp_vars(e.left)
        yield from bexp_vars(e.right)
    elif isinstance(e, Not):
        yield from bexp_vars(e.operand)


def subst_bexp(e: BExp, mapping: Mapping[str, AExp]) -> BExp:
    if isinstance(e, Cmp):
        return Cmp(e.op, subst_aexp(e.left, mapping), subst_aexp(e.right, mapping))
    if isinstance(e, And):
        return And(subst_bexp(e.left, mapping), subst_bexp(e.right, mapping))
    if isinstance(e, Or):
        return Or(subst_bexp(e.left, mapping), subst_bexp(e.right, mapping))
    if isinstance(e, Not):
        return Not(subst_bexp(e.operand, mapping))
    return e


# --------------------------------------------------------------------------
# probabilities


def format_rational(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Const:
    value: Fraction

    def __str__(self):
        return format_rational(self.value)


@dataclass(frozen=True)
class Param:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Quotient:
    """State-dependent probability ``num / den`` produced by observation hoisting."""

    num: object  # Expectation
    den: object  # Expectation

    def __str__(self):
        return f"({self.num}) / ({self.den})"


ProbExp = Union[Const, Param, Quotient]


# --------------------------------------------------------------------------
# statements


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Abort:
    pass


@dataclass(frozen=True)
class Assign:
    var: str
    expr: AExp


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    second: "Stmt"


@dataclass(frozen=True)
class Ite:
    guard: BExp
    then: "Stmt"
    orelse: "Stmt"


@dataclass(frozen=True)
class PChoice:
    left: "Stmt"
    prob: ProbExp
    right: "Stmt"


@dataclass(frozen=True)
class NDChoice:
    left: "Stmt"
    right: "Stmt"


@dataclass(frozen=True)
class While:
    guard: BExp
    body: "Stmt"


@dataclass(frozen=True)
class Observe:
    guard: BExp


Stmt = Union[Skip, Abort, Assign, Seq, Ite, PChoice, NDChoice, While, Observe]

SKIP = Skip()
ABORT = Abort()


def seq(*stmts: Stmt) -> Stmt:
    """Right-nested sequence of ``stmts`` (nested sequences are flattened)."""
    flat: List[Stmt] = []
    for s in stmts:
        flat.extend(seq_items(s))
    if not flat:
        return SKIP
    result = flat[-1]
    for s in reversed(flat[:-1]):
        result = Seq(s, result)
    return result


def seq_items(s: Stmt) -> List[Stmt]:
    if isinstance(s, Seq):
        return seq_items(s.first) + seq_items(s.second)
    return [s]


def walk(s: Stmt) -> Iterator[Stmt]:
    """Pre-order traversal of all statements nested in ``s``."""
    yield s
    if isinstance(s, Seq):
        yield from walk(s.first)
        yield from walk(s.second)
    elif isinstance(s, (Ite, PChoice, NDChoice)):
        a, b = (s.then, s.orelse) if isinstance(s, Ite) else (s.left, s.right)
        yield from walk(a)
        yield from walk(b)
    elif isinstance(s, While):
        yield from walk(s.body)


def is_fully_probabilistic(s: Stmt) -> bool:
    return not any(isinstance(n, NDChoice) for n in walk(s))


def is_loop_free(s: Stmt) -> bool:
    return not any(isinstance(n, While) for n in walk(s))


def has_observe(s: Stmt) -> bool:
    return any(isinstance(n, Observe) for n in walk(s))


def assigned_vars(s: Stmt) -> List[str]:
    out: Dict[str, None] = {}
    for n in walk(s):
        if isinstance(n, Assign):
            out.setdefault(n.var)
    return list(out)


def read_vars(s: Stmt) -> List[str]:
    """Identifiers read by arithmetic or boolean expressions, in order."""
    out: Dict[str, None] = {}
    for n in walk(s):
        names: Iterator[str] = iter(())
        if isinstance(n, Assign):
            names = aexp_vars(n.expr)
        elif isinstance(n, (Ite, While, Observe)):
            names = bexp_vars(n.guard)
        for name in names:
            out.setdefault(name)
    return list(out)


def prob_params(s: Stmt) -> List[str]:
    out: Dict[str, None] = {}
    for n in walk(s):
        if isinstance(n, PChoice) and isinstance(n.prob, Param):
            out.setdefault(n.prob.name)
    return list(out)


# --------------------------------------------------------------------------
# programs


@dataclass(frozen=True)
class Program:
    """A statement plus its variable and parameter scopes.

    ``variables`` are the program variables (assignment targets, in order of
    first occurrence).  ``params`` are unbound names: probability parameters
    used in ``[p]`` and read-only integer parameters such as a bound ``k``.
    """

    body: Stmt
    variables: Tuple[str, ...] = ()
    params: Tuple[str, ...] = ()

    @classmethod
    def from_stmt(cls, body: Stmt, extra_vars=()) -> "Program":
        variables = list(dict.fromkeys(list(extra_vars) + assigned_vars(body)))
        params = dict.fromkeys(prob_params(body))
        for name in read_vars(body):
            if name not in variables:
                params.setdefault(name)
        return cls(body, tuple(variables), tuple(params))

    def __str__(self):
        return pretty_print(self)

    @property
    def int_params(self) -> Tuple[str, ...]:
        probs = set(prob_params(self.body))
        return tuple(p for p in self.params if p not in probs)


# --------------------------------------------------------------------------
# pretty printing


def pretty_print(p: Union[Program, Stmt], indent: str = "  ") -> str:
    body = p.body if isinstance(p, Program) else p
    return "\n".join(_lines(body, indent, 0))


def _block(s, indent, depth):
    inner = _lines(s, indent, depth + 1)
    return ["{"] + inner + ["}"]


def _lines(s: Stmt, indent: str, depth: int) -> List[str]:
    pad = indent * depth
    if isinstance(s, Seq):
        items = seq_items(s)
        out: List[str] = []
        for i, item in enumerate(items):
            lines = _lines(item, indent, depth)
            if i < len(items) - 1:
                lines[-1] += ";"
            out.extend(lines)
        return out
    if isinstance(s, Skip):
        return [pad + "skip"]
    if isinstance(s, Abort):
        return [pad + "abort"]
    if isinstance(s, Assign):
        return [f"{pad}{s.var} := {s.expr}"]
    if isinstance(s, Observe):
        return [f"{pad}observe ({s.guard})"]
    if isinstance(s, While):
        return [f"{pad}while ({s.guard}) {{"] + _lines(s.body, indent, depth + 1) + [pad + "}"]
    if isinstance(s, Ite):
        return (
            [f"{pad}if ({s.guard}) {{"]
            + _lines(s.then, indent, depth + 1)
            + [pad + "} else {"]
            + _lines(s.orelse, indent, depth + 1)
            + [pad + "}"]
        )
    if isinstance(s, (PChoice, NDChoice)):
        op = f"[{s.prob}]" if isinstance(s, PChoice) else "[]"
        return (
            [pad + "{"]
            + _lines(s.left, indent, depth + 1)
            + [f"{pad}}} {op} {{"]
            + _lines(s.right, indent, depth + 1)
            + [pad + "}"]
        )
    raise TypeError(f"not a statement: {s!r}")


def one_line(s: Union[Program, Stmt]) -> str:
    """Compact single-line rendering, used for state labels."""
    return " ".join(line.strip() for line in pretty_print(s).splitlines())


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ScopeError:
    name: str

    def __str__(self):
        return f"ScopeError({self.name}): undeclared identifier"


@dataclass(frozen=True)
class RangeError:
    value: Fraction

    def __str__(self):
        return f"RangeError({format_rational(self.value)}): probability outside [0, 1]"


@dataclass(frozen=True)
class NameError_:
    name: str
    reason: str

    def __str__(self):
        return f"NameError({self.name}): {self.reason}"


@dataclass(frozen=True)
class CanonicalError:
    value: object

    def __str__(self):
        return f"CanonicalError({self.value!r}): not an exact rational"


def validate(p: Program, allow_reserved: bool = True) -> List[object]:
    """Return every static violation of ``p``; an empty list means ok."""
    problems: List[object] = []
    readable = set(p.variables) | set(p.params)
    seen = set()

    def check(name, scope):
        if (name, id(scope)) in seen:
            return
        seen.add((name, id(scope)))
        if not _IDENT.match(name) or name in KEYWORDS:
            problems.append(NameError_(name, "not a valid identifier"))
        elif not allow_reserved and name.startswith(RESERVED_PREFIX):
            problems.append(NameError_(name, "prefix '__' is reserved for generated code"))
        if name not in scope:
            problems.append(ScopeError(name))

    writable = set(p.variables)
    for node in walk(p.body):
        if isinstance(node, Assign):
            check(node.var, writable)
            for n in aexp_vars(node.expr):
                check(n, readable)
        elif isinstance(node, (Ite, While, Observe)):
            for n in bexp_vars(node.guard):
                check(n, readable)
        elif isinstance(node, PChoice):
            prob = node.prob
            if isinstance(prob, Const):
                if not isinstance(prob.value, Fraction):
                    problems.append(CanonicalError(prob.value))
                elif not 0 <= prob.value <= 1:
                    problems.append(RangeError(prob.value))
            elif isinstance(prob, Param):
                check(prob.name, set(p.params))
    return problems


# --------------------------------------------------------------------------
# parameter instantiation


def instantiate(p: Program, bindings: Mapping[str, object]) -> Program:
    """Replace parameters by values.

    Probability parameters receive rationals in [0, 1]; integer parameters
    receive integers.  Unknown binding names are ignored so one binding set
    can serve several programs.
    """
    from .errors import ValidationError

    probs = set(prob_params(p.body))
    values: Dict[str, Fraction] = {}
    for name, raw in bindings.items():
        if name in p.params:
            values[name] = Fraction(raw)
    problems = []
    int_map: Dict[str, AExp] = {}
    for name, v in values.items():
        if name in probs:
            if not 0 <= v <= 1:
                problems.append(RangeError(v))
        else:
            if v.denominator != 1:
                problems.append(NameError_(name, f"integer parameter bound to {v}"))
            int_map[name] = IntConst(int(v))
    if problems:
        raise ValidationError(problems)

    def go(s: Stmt) -> Stmt:
        if isinstance(s, Assign):
            return Assign(s.var, subst_aexp(s.expr, int_map))
        if isinstance(s, Seq):
            return Seq(go(s.first), go(s.second))
        if isinstance(s, Ite):
            return Ite(subst_bexp(s.guard, int_map), go(s.then), go(s.orelse))
        if isinstance(s, While):
            return While(subst_bexp(s.guard, int_map), go(s.body))
        if isinstance(s, Observe):
            return Observe(subst_bexp(s.guard, int_map))
        if isinstance(s, NDChoice):
            return NDChoice(go(s.left), go(s.right))
        if isinstance(s, PChoice):
            prob = s.prob
            if isinstance(prob, Param) and prob.name in values:
                prob = Const(values[prob.name])
            return PChoice(go(s.left), prob, go(s.right))
        return s

    body = go(p.body) if values else p.body
    params = tuple(n for n in p.params if n not in values)
    return Program(body, p.variables, params)
