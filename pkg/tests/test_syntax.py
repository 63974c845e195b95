from fractions import Fraction

import pytest

from cpgcl.errors import ParseError, ValidationError
from cpgcl.parser import parse, parse_expectation, parse_state, parse_stmt
from cpgcl.syntax import (
    Assign,
    Const,
    IntConst,
    Observe,
    Param,
    PChoice,
    instantiate,
    one_line,
    pretty_print,
)


def test_parse_probabilistic_choice():
    s = parse_stmt("{x := 0} [1/2] {x := 1}")
    assert isinstance(s, PChoice)
    assert s.prob == Const(Fraction(1, 2))
    assert s.left == Assign("x", IntConst(0))


def test_parameters_are_collected():
    p = parse("{x := 0} [p] {x := 1}; observe (x <= k)")
    assert p.variables == ("x",)
    assert set(p.params) == {"p", "k"}
    assert p.int_params == ("k",)


def test_instantiate_substitutes_both_kinds():
    p = instantiate(parse("{x := 0} [p] {x := 1}; observe (x <= k)"), {"p": "1/3", "k": 2, "other": 5})
    assert p.params == ()
    assert p.body.first.prob == Const(Fraction(1, 3))
    assert p.body.second == parse_stmt("observe (x <= 2)")


def test_instantiate_rejects_probability_out_of_range():
    with pytest.raises(ValidationError):
        instantiate(parse("{x := 0} [p] {x := 1}"), {"p": 2})


def test_parse_error_has_location():
    with pytest.raises(ParseError) as info:
        parse("x := 1;\ny := ")
    assert info.value.line == 2


def test_probability_out_of_range_is_rejected():
    with pytest.raises((ParseError, ValidationError)):
        parse("{x := 0} [3/2] {x := 1}")


def test_reserved_prefix_needs_opt_in():
    with pytest.raises((ParseError, ValidationError)):
        parse("__rerun := 1")
    assert parse("__rerun := 1", allow_reserved=True).variables == ("__rerun",)


def test_pretty_print_round_trip():
    text = "x := 0; while (x < 3) { {x := x + 1} [1/2] {skip} }; {y := 1} [] {abort}; observe (!(x = y) || y >= 0)"
    p = parse(text)
    assert parse(pretty_print(p)).body == p.body
    assert parse(one_line(p)).body == p.body


def test_param_probability_prints_by_name():
    s = parse_stmt("{x := 0} [p] {x := 1}")
    assert s.prob == Param("p")
    assert "[p]" in one_line(s)


def test_observe_guard():
    assert isinstance(parse_stmt("observe (x = 1)"), Observe)


def test_parse_state_and_expectation():
    assert parse_state("x=1, y=-2") == {"x": 1, "y": -2}
    assert parse_state("") == {}
    with pytest.raises(ParseError):
        parse_state("x=1/2")
    parse_expectation("[x = 0] * (10 + x) + 3")
