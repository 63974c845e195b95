"""
Recursive-descent parser for cpGCL programs and for the expectation surface
syntax accepted by ``--post``.

    stmt   := basic { ";" basic }
    basic  := "skip" | "abort" | ident ":=" aexp
            | "if" "(" bexp ")" block [ "else" block ]
            | block "[" pexp "]" block | block "[]" block | block
            | "while" "(" bexp ")" block | "observe" "(" bexp ")"
    pexp   := rational | decimal | ident | "(" exp ")" "/" "(" exp ")"

Whitespace is insignificant and ``//`` starts a line comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List

from . import expectation as ex
from .errors import ParseError, ValidationError
from .syntax import (
    And,
    BinOp,
    BoolConst,
    Cmp,
    Const,
    IntConst,
    KEYWORDS,
    Not,
    Or,
    Param,
    Program,
    Quotient,
    Var,
    validate,
)
from .syntax import (
    Abort,
    Assign,
    Ite,
    NDChoice,
    Observe,
    PChoice,
    Skip,
    While,
    seq,
)

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|&&|\|\||!=|<=|>=|[=<>!(){}\[\];,+\-*/^])
    """,
    re.VERBOSE,
)

CMP = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Token:
    kind: str  # num, ident, op, eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        else:
            for i, ch in enumerate(m.group()):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    # -- helpers -----------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def error(self, msg: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"{msg}, found {found}", t.line, t.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.error("expected identifier")
        self.i += 1
        return t.text

    def finish(self):
        if self.tok.kind != "eof":
            self.error("unexpected trailing input")

    # -- statements --------------------------------------------------------

    def stmt(self):
        items = [self.basic()]
        while self.accept(";"):
            items.append(self.basic())
        return seq(*items)

    def block(self):
        self.expect("{")
        s = self.stmt()
        self.expect("}")
        return s

    def basic(self):
        t = self.tok
        if self.accept("skip"):
            return Skip()
        if self.accept("abort"):
            return Abort()
        if self.accept("if"):
            self.expect("(")
            g = self.bexp()
            self.expect(")")
            then = self.block()
            orelse = self.block() if self.accept("else") else Skip()
            return Ite(g, then, orelse)
        if self.accept("while"):
            self.expect("(")
            g = self.bexp()
            self.expect(")")
            return While(g, self.block())
        if self.accept("observe"):
            self.expect("(")
            g = self.bexp()
            self.expect(")")
            return Observe(g)
        if self.at("{"):
            left = self.block()
            if self.at("[") and self.peek().text == "]":
                self.i += 2
                return NDChoice(left, self.block())
            if self.accept("["):
                p = self.pexp()
                self.expect("]")
                return PChoice(left, p, self.block())
            return left
        if t.kind == "ident" and t.text not in KEYWORDS:
            name = self.ident()
            self.expect(":=")
            return Assign(name, self.aexp())
        self.error("expected a statement")

    def pexp(self):
        t = self.tok
        if t.kind == "num":
            return Const(self.rational())
        if t.kind == "ident" and t.text not in KEYWORDS:
            return Param(self.ident())
        if self.at("("):
            self.expect("(")
            num = self.exp()
            self.expect(")")
            self.expect("/")
            self.expect("(")
            den = self.exp()
            self.expect(")")
            return Quotient(num, den)
        self.error("expected a probability")

    def rational(self) -> Fraction:
        t = self.tok
        if t.kind != "num":
            self.error("expected a number")
        self.i += 1
        value = Fraction(t.text)
        if self.at("/") and self.peek().kind == "num" and "." not in t.text:
            self.i += 1
            d = self.tok
            if "." in d.text:
                self.error("expected an integer denominator")
            self.i += 1
            if int(d.text) == 0:
                raise ParseError("zero denominator", d.line, d.col)
            value = Fraction(int(t.text), int(d.text))
        return value

    # -- arithmetic --------------------------------------------------------

    def aexp(self):
        e = self.aterm()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            e = BinOp(op, e, self.aterm())
        return e

    def aterm(self):
        e = self.afactor()
        while self.at("*"):
            self.i += 1
            e = BinOp("*", e, self.afactor())
        return e

    def afactor(self):
        t = self.tok
        if t.kind == "num":
            if "." in t.text:
                self.error("expected an integer")
            self.i += 1
            return IntConst(int(t.text))
        if self.accept("-"):
            inner = self.afactor()
            if isinstance(inner, IntConst) and inner.value >= 0 and self.tokens[self.i - 1].kind == "num":
                return IntConst(-inner.value)
            return BinOp("-", IntConst(0), inner)
        if self.accept("("):
            e = self.aexp()
            self.expect(")")
            return e
        if t.kind == "ident" and t.text not in KEYWORDS:
            return Var(self.ident())
        self.error("expected an arithmetic expression")

    # -- boolean -----------------------------------------------------------

    def bexp(self):
        e = self.bconj()
        while self.accept("||"):
            e = Or(e, self.bconj())
        return e

    def bconj(self):
        e = self.bunary()
        while self.accept("&&"):
            e = And(e, self.bunary())
        return e

    def bunary(self):
        if self.accept("!"):
            return Not(self.bunary())
        if self.accept("true"):
            return BoolConst(True)
        if self.accept("false"):
            return BoolConst(False)
        if self.at("("):
            saved = self.i
            try:
                self.i += 1
                e = self.bexp()
                self.expect(")")
                if self.tok.text in CMP + ("+", "-", "*"):
                    raise _Backtrack
                return e
            except (ParseError, _Backtrack):
                self.i = saved
        left = self.aexp()
        if self.tok.kind != "op" or self.tok.text not in CMP:
            self.error("expected a comparison operator")
        op = self.tok.text
        self.i += 1
        return Cmp(op, left, self.aexp())

    # -- expectations ------------------------------------------------------

    def exp(self):
        e = self.eterm()
        while self.at("+") or self.at("-"):
            minus = self.tok.text == "-"
            self.i += 1
            rhs = self.eterm()
            if minus:
                if not isinstance(rhs, ex.TermSum):
                    self.error("cannot subtract a minimum")
                rhs = ex.negate_termsum(rhs)
            e = ex.add(e, rhs)
        return e

    def eterm(self):
        e = self.eunary()
        while self.at("*"):
            self.i += 1
            e = ex.mul(e, self.eunary())
        return e

    def eunary(self):
        if self.accept("-"):
            inner = self.eunary()
            if not isinstance(inner, ex.TermSum):
                self.error("cannot negate a minimum")
            return ex.negate_termsum(inner)
        base = self.eatom()
        if self.accept("^"):
            t = self.tok
            if t.kind != "num" or "." in t.text:
                self.error("expected an integer exponent")
            self.i += 1
            result = ex.ONE
            for _ in range(int(t.text)):
                result = ex.mul(result, base)
            return result
        return base

    def eatom(self):
        t = self.tok
        if t.kind == "num":
            return ex.const(self.rational())
        if self.accept("inf"):
            return ex.INFINITY
        if self.accept("min"):
            self.expect("(")
            args = [self.exp()]
            while self.accept(","):
                args.append(self.exp())
            self.expect(")")
            result = args[0]
            for a in args[1:]:
                result = ex.minimum(result, a)
            return result
        if self.accept("("):
            e = self.exp()
            self.expect(")")
            return e
        if self.accept("["):
            g = self.bexp()
            self.expect("]")
            return ex.indicator(g)
        if t.kind == "ident" and t.text not in KEYWORDS:
            return ex.from_poly(ex.Poly.var(self.ident()))
        self.error("expected an expectation")


def parse(text: str, allow_reserved: bool = False) -> Program:
    """Parse program text; raises ParseError or ValidationError."""
    p = Parser(text)
    body = p.stmt()
    p.finish()
    program = Program.from_stmt(body)
    problems = validate(program, allow_reserved=allow_reserved)
    if problems:
        raise ValidationError(problems)
    return program


def parse_stmt(text: str):
    p = Parser(text)
    body = p.stmt()
    p.finish()
    return body


def parse_expectation(text: str):
    """Parse the ``[G]*(poly) + ...`` surface syntax into a simplified expectation."""
    p = Parser(text)
    e = p.exp()
    p.finish()
    return ex.simplify(e)


def parse_bexp(text: str):
    p = Parser(text)
    e = p.bexp()
    p.finish()
    return e


def parse_state(text: str):
    """Parse ``x=1,y=-2`` style bindings into a dict of integers."""
    out = {}
    for part in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in part:
            raise ParseError(f"expected name=value, found {part!r}")
        name, value = (s.strip() for s in part.split("=", 1))
        try:
            out[name] = int(value)
        except ValueError:
            raise ParseError(f"value of {name} must be an integer, found {value!r}") from None
    return out


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"not a rational number: {text!r}") from None
