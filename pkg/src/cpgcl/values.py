"""Analysis results: an exact rational, an interval of rationals, or Undefined (0/0)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .syntax import format_rational


@dataclass(frozen=True)
class Exact:
    value: Fraction

    def __str__(self):
        return format_rational(self.value)

    def describe(self) -> str:
        return describe_rational(self.value)


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, q) -> bool:
        return self.lo <= q <= self.hi

    def __str__(self):
        return f"[{format_rational(self.lo)}, {format_rational(self.hi)}]"

    def describe(self) -> str:
        return f"[{decimal(self.lo)}, {decimal(self.hi)}] (width {decimal(self.width)})"


@dataclass(frozen=True)
class _Undefined:
    def __str__(self):
        return "Undefined"

    def describe(self) -> str:
        return "Undefined (0/0: no run satisfies the observations with positive probability)"


UNDEFINED = _Undefined()

AnalysisValue = Union[Exact, Interval, _Undefined]


def decimal(q) -> str:
    """Display-only rendering with 6 significant digits."""
    return f"{float(q):.6g}"


def describe_rational(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{format_rational(q)} (≈{decimal(q)})"


def quotient(num: Fraction, den: Fraction) -> AnalysisValue:
    """``num/den`` with the 0/0 convention; any x/0 is Undefined."""
    if den == 0:
        return UNDEFINED
    return Exact(Fraction(num) / Fraction(den))


def order_key(v: AnalysisValue):
    """Total order used by demonic minimization: Undefined lies below every value."""
    if v is UNDEFINED:
        return (0, Fraction(0))
    if isinstance(v, Exact):
        return (1, v.value)
    return (1, v.lo)
