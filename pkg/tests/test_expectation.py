from fractions import Fraction

from cpgcl import expectation as ex
from cpgcl.parser import parse_bexp, parse_expectation
from cpgcl.syntax import BinOp, IntConst, Var


def test_evaluation_of_guarded_polynomial():
    f = parse_expectation("[x = 0] * (10 + x) + [x > 0] * x * x")
    assert ex.eval_exp(f, {"x": 0}) == 10
    assert ex.eval_exp(f, {"x": 3}) == 9
    assert ex.eval_exp(f, {"x": -1}) == 0


def test_add_and_scale_are_exact():
    f = ex.add(ex.scale(Fraction(1, 3), ex.const(1)), ex.scale(Fraction(2, 3), ex.const(1)))
    assert ex.is_constant(f) and ex.constant_value(f) == 1


def test_substitution_matches_evaluation_in_updated_state():
    f = parse_expectation("[x < 2] * (x + y)")
    g = ex.substitute(f, "x", BinOp("+", Var("x"), IntConst(1)))
    for x in range(-3, 4):
        assert ex.eval_exp(g, {"x": x, "y": 2}) == ex.eval_exp(f, {"x": x + 1, "y": 2})


def test_complementary_guards_merge():
    b = parse_bexp("x = 0")
    f = ex.add(ex.guard_mul(b, ex.const(1)), ex.guard_mul(parse_bexp("!(x = 0)"), ex.const(1)))
    assert ex.is_constant(ex.simplify(f))


def test_upper_bound_and_excess():
    assert ex.upper_bound(parse_expectation("[x = 0] * 1/2 + [y = 1] * 1/4")) == Fraction(3, 4)
    assert ex.upper_bound(parse_expectation("x")) is None
    assert ex.definite_excess(ex.const(2), 1) == 2
    assert ex.definite_excess(parse_expectation("[x = 0]"), 1) is None


def test_variables():
    assert ex.variables(parse_expectation("[x = 0] * y")) == {"x", "y"}
