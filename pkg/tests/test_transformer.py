from fractions import Fraction

import pytest

from cpgcl import transformer
from cpgcl import expectation as ex
from cpgcl.errors import BoundExceeded, Infeasible, NonConvergent, NondeterminismUnsupported
from cpgcl.parser import parse, parse_expectation
from cpgcl.values import UNDEFINED, Exact, Interval


def value(result, state=None):
    return ex.eval_exp(result.value, state or {})


def test_wp_of_coin():
    p = parse("{x := 0} [1/3] {x := 1}")
    assert value(transformer.wp(p, parse_expectation("x"))) == Fraction(2, 3)


def test_abort_differs_between_wp_and_wlp():
    p = parse("{abort} [1/4] {x := 1}")
    f = parse_expectation("[x = 1]")
    assert value(transformer.wp(p, f)) == Fraction(3, 4)
    assert value(transformer.wlp(p, f)) == 1


def test_observe_zeroes_violating_runs():
    p = parse("{x := 0} [1/2] {x := 1}; observe (x = 1)")
    assert value(transformer.wlp(p, ex.ONE)) == Fraction(1, 2)


def test_parity_loop_is_solved_exactly():
    # a = 1/2 + b/2 and b = a/2 for the values a, b at y = 0, y = 1, so a = 2/3
    p = parse("x := 1; y := 0; while (x = 1) { {x := 0} [1/2] {y := 1 - y} }")
    r = transformer.wp(p, parse_expectation("[y = 0]"))
    assert r.exact
    assert value(r) == Fraction(2, 3)


def test_unrolled_bounds_without_acceleration():
    p = parse("x := 1; while (x = 1) { {x := 0} [1/2] {skip} }")
    f = parse_expectation("1")
    lo = transformer.wp(p, f, 3, accelerate=False)
    hi = transformer.wlp(p, f, 3, accelerate=False)
    assert not lo.exact
    assert value(lo) <= 1 <= value(hi)


def test_wlp_rejects_unbounded_post():
    with pytest.raises(BoundExceeded):
        transformer.wlp(parse("skip"), ex.const(2))


def test_cwp_undefined_and_strict():
    p = parse("observe (x = 1)")
    assert transformer.cwp(p, ex.ONE, {"x": 0}) is UNDEFINED
    assert transformer.cwp(p, ex.ONE, {"x": 1}) == Exact(Fraction(1))
    with pytest.raises(Infeasible):
        transformer.cwp(p, ex.ONE, {"x": 0}, strict=True)


def test_cwp_rejects_nondeterminism():
    with pytest.raises(NondeterminismUnsupported):
        transformer.cwp(parse("{x := 1} [] {x := 2}"), ex.ONE, {})


def test_cwp_interval_for_unsolved_loop():
    # a loop whose counter grows without bound has no finite-basis fixpoint
    p = parse("c := 0; x := 1; while (x = 1) { {x := 0} [1/2] {c := c + 1} }; observe (c <= 3)")
    f = parse_expectation("[c = 0]")
    try:
        v = transformer.cwp(p, f, {}, unroll_depth=8)
    except NonConvergent:
        v = transformer.cwp(p, f, {}, unroll_depth=8, post_bound=1)
    exact = Fraction(1, 2) / (1 - Fraction(1, 16))
    assert (isinstance(v, Interval) and v.contains(exact)) or v == Exact(exact)


def test_quotient_table_string():
    t = transformer.quotient_table(parse("{abort} [1/2] {x := 1}"), parse_expectation("[x = 1]"), {})
    # wp(f) = 1/2, wlp(f) = 1, wp(1) = 1/2, wlp(1) = 1
    assert str(t) == "1/2 1 1 2"
    assert t.not_a_probability == (False, False, False, True)
