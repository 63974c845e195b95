from fractions import Fraction

import pytest

from cpgcl import corpus, solver, transform, transformer
from cpgcl import expectation as ex
from cpgcl.errors import NondeterminismUnsupported, NotIid
from cpgcl.operational import build
from cpgcl.parser import parse, parse_expectation, parse_stmt
from cpgcl.syntax import Program, has_observe, instantiate, one_line
from cpgcl.values import Exact


def test_hoist_removes_observations():
    p = parse("{x := 0} [1/2] {x := 1}; observe (x = 1)")
    res = transform.hoist(p)
    assert not has_observe(res.program)
    assert ex.constant_value(res.h) == Fraction(1, 2)
    assert one_line(transform.simplify_stmt(res.program)) == "x := 1"


def test_hoist_rejects_nondeterminism():
    with pytest.raises(NondeterminismUnsupported):
        transform.hoist(parse("{x := 0} [] {x := 1}"))


def test_simplify_dead_and_duplicate_branches():
    s = parse_stmt("{x := 0} [0] {x := 1}; if (true) {skip} else {y := 1}; {z := 1} [1/2] {z := 1}; observe (true)")
    assert one_line(transform.simplify_stmt(s)) == "x := 1; z := 1"


def test_observe_to_loop_preserves_conditional_value():
    p = instantiate(corpus.program("fair_coin_observe"), {"p": Fraction(1, 3)})
    q = transform.observe_to_loop(p)
    assert not has_observe(q.body)
    text = one_line(q)
    assert "__rerun := 0" in text and "while (__rerun = 1)" in text
    assert solver.expected_reward(build(q, {}, parse_expectation("[x = 0]"))) == Fraction(1, 2)


def test_iid_check():
    loop = parse_stmt("while (x = y) { {x := 0} [p] {x := 1}; {y := 0} [p] {y := 1} }")
    assert transform.iid_check(loop, ["p"])
    assert not transform.iid_check(parse_stmt("while (x < 3) { x := x + 1 }"))
    assert not transform.iid_check(parse_stmt("while (true) { skip }"))
    culprit, _ = transform.iid_diagnose(parse_stmt("while (x = 0) { {x := 0} [] {x := 1} }"))
    assert culprit == "[]"


def test_loop_to_observe_shape():
    loop = parse_stmt("while (x = y) { {x := 0} [1/3] {x := 1}; {y := 0} [1/3] {y := 1} }")
    out = transform.loop_to_observe(loop)
    assert out == parse_stmt("{x := 0} [1/3] {x := 1}; {y := 0} [1/3] {y := 1}; observe (!(x = y))")


def test_deloop_preserves_value():
    p = instantiate(corpus.program("fair_coin_loop"), {"p": Fraction(1, 3)})
    f = parse_expectation("[x = 0]")
    q = transform.deloop_program(p)
    assert transformer.cwp(q, f, {}) == Exact(Fraction(1, 2))
    assert solver.expected_reward(build(p, {}, f)) == Fraction(1, 2)


def test_deloop_reports_culprit():
    p = corpus.program("crowds")
    with pytest.raises(NotIid) as info:
        transform.deloop_program(p)
    assert "counter" in str(info.value)


def test_hoisted_program_probability_is_side_expectation_ratio():
    p = parse("{x := 0} [1/2] {x := 1}; if (x = 0) {observe (y = 0)} else {skip}")
    res = transform.hoist(p)
    hp = Program.from_stmt(res.program, extra_vars=p.variables)
    f = parse_expectation("[x = 0]")
    for y in (0, 1):
        expected = transformer.cwp(p, f, {"y": y})
        assert Exact(solver.expected_reward(build(hp, {"y": y}, f))) == expected
