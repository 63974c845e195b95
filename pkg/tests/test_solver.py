from fractions import Fraction

import pytest

from cpgcl import solver
from cpgcl.errors import BoundExceeded, CyclicNondeterminism, NondeterminismUnsupported
from cpgcl.operational import ModelBuilder, build, load_explicit
from cpgcl.parser import parse, parse_expectation
from cpgcl.values import UNDEFINED, Exact, Interval

CHAIN = """
states 5 initial 0
state 0 labels {} reward 0
state 1 labels {term} reward 3
state 2 labels {} reward 0
state 3 labels {bad} reward 0
state 4 labels {sink} reward 0
trans 0 unique { 1:1/2, 2:1/2 }
trans 1 unique { 4:1 }
trans 2 unique { 2:1/2, 3:1/2 }
trans 3 unique { 4:1 }
trans 4 unique { 4:1 }
"""


def test_reachability_and_rewards_on_explicit_chain():
    m = load_explicit(CHAIN)
    assert solver.reach_prob(m, "bad") == Fraction(1, 2)
    assert solver.expected_reward(m) == Fraction(3, 2)
    assert solver.conditional_expected_reward(m) == Exact(Fraction(3))


def test_liberal_reward_counts_divergence():
    m = build(parse("{x := 1; while (x = 1) { skip }} [1/3] {y := 1}"), {}, parse_expectation("[y = 1]"))
    assert solver.expected_reward(m) == Fraction(2, 3)
    assert solver.liberal_expected_reward(m) == 1
    with pytest.raises(BoundExceeded):
        solver.liberal_expected_reward(build(parse("skip"), {}, parse_expectation("2")))


def test_infeasible_gives_undefined():
    m = build(parse("observe (false)"), {}, parse_expectation("1"))
    assert solver.conditional_expected_reward(m) is UNDEFINED


def test_nondeterminism_needs_scheduler():
    m = build(parse("{x := 1} [] {x := 2}"), {}, parse_expectation("x"))
    with pytest.raises(NondeterminismUnsupported):
        solver.expected_reward(m)
    value, choice = solver.min_conditional(m)
    assert value == Exact(Fraction(1))
    assert list(choice.values()) == ["left"]


def test_cyclic_nondeterminism_is_rejected():
    m = build(parse("x := 1; while (x = 1) { {x := 0} [] {skip} }"), {})
    with pytest.raises(CyclicNondeterminism):
        solver.min_conditional(m)


def test_bounded_conditional_contains_exact_value():
    # P(c = 0 | c <= 3) for a geometric counter is (1/2) / (15/16) = 8/15
    p = parse("c := 0; x := 1; while (x = 1) { {x := 0} [1/2] {c := c + 1} }; observe (c <= 3)")
    b = ModelBuilder(p, {}, parse_expectation("[c = 0]"))
    widths = []
    for size in (20, 40, 80, 160):
        v = solver.bounded_conditional(b.expand(size), Fraction(1))
        assert isinstance(v, Interval) and v.contains(Fraction(8, 15))
        widths.append(v.width)
    assert widths == sorted(widths, reverse=True)


def test_converge_reaches_tolerance():
    p = parse("c := 0; x := 1; while (x = 1) { {x := 0} [1/2] {c := c + 1} }; observe (c <= 3)")
    v, _ = solver.converge(ModelBuilder(p, {}, parse_expectation("[c = 0]")), Fraction(1), Fraction(1, 10**9))
    assert v.contains(Fraction(8, 15)) and v.width < Fraction(1, 10**9)


def test_converge_on_finite_model_is_exact():
    p = parse("{x := 0} [1/2] {x := 1}; observe (x = 1)")
    v, _ = solver.converge(ModelBuilder(p, {}, parse_expectation("x")), Fraction(1), Fraction(1, 10**6))
    assert v == Exact(Fraction(1))
