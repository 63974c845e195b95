from fractions import Fraction

import pytest

from cpgcl import corpus
from cpgcl.errors import FormatError, InvariantError, UninstantiatedParameter
from cpgcl.operational import (
    BAD_LABEL,
    SINK_LABEL,
    TERM,
    ModelBuilder,
    build,
    export_dot,
    load_explicit,
    save_explicit,
)
from cpgcl.parser import parse, parse_expectation, parse_stmt
from cpgcl.syntax import Program, instantiate


def test_coin_with_observe_model():
    m = build(parse("{x := 0} [1/2] {x := 1}; observe (x = 1)"), {}, parse_expectation("x"))
    assert len(m.states_with(BAD_LABEL)) == 1
    assert len(m.states_with(SINK_LABEL)) == 1
    (t,) = m.states_with(TERM)
    assert m.reward_of(t) == 1
    assert m.is_fully_probabilistic()
    m.check()


def test_nondet_param_model_size():
    p = instantiate(corpus.program("nondet_param"), {"q": Fraction(1, 2)})
    m = build(p, {}, parse_expectation("x"))
    assert len(m) == 11
    assert m.edge_count() == 13
    assert len(m.nondeterministic_states()) == 1


def test_identical_configurations_are_merged():
    m = build(parse("{x := 1} [1/2] {x := 1}"), {})
    # both branches reach the same terminal configuration
    assert len(m.states_with(TERM)) == 1


def test_missing_variables_default_to_zero():
    p = Program.from_stmt(parse_stmt("y := x + 1"), extra_vars=("x",))
    m = build(p, {}, parse_expectation("y + z"))
    (t,) = m.states_with(TERM)
    assert m.reward_of(t) == 1


def test_uninstantiated_parameter():
    with pytest.raises(UninstantiatedParameter):
        build(parse("{x := 0} [p] {x := 1}"), {})


def test_builder_is_incremental():
    p = parse("x := 1; while (x > 0) { {x := x + 1} [1/2] {x := x - 1} }")
    b = ModelBuilder(p, {})
    small = b.expand(10)
    n, frontier = len(small), bool(small.frontier)
    assert frontier and not b.complete
    assert len(b.expand(40)) > n


def test_explicit_round_trip_and_errors():
    m = corpus.model("context_dependence")
    text = save_explicit(m)
    assert save_explicit(load_explicit(text)) == text
    with pytest.raises(FormatError):
        load_explicit("states two initial 0")
    with pytest.raises((FormatError, InvariantError)):
        load_explicit("states 1 initial 0\nstate 0 labels {} reward 0\ntrans 0 unique { 0:1/2 }\n")


def test_dot_export_is_deterministic():
    p = instantiate(corpus.program("nondet_param"), {"q": Fraction(1, 2)})
    a = export_dot(build(p, {}))
    assert a == export_dot(build(p, {}))
    assert a.startswith("digraph")
    assert "style=dotted" in a
