import time
from fractions import Fraction

from cpgcl import checks, corpus, solver, transform, transformer
from cpgcl import expectation as ex
from cpgcl.operational import ModelBuilder, build
from cpgcl.parser import parse_expectation, parse_rational
from cpgcl.syntax import Const, PChoice, Program, instantiate, walk
from cpgcl.values import UNDEFINED, Exact, Interval


def analyze_both(name, post, bindings=None):
    p = corpus.program(name)
    if bindings:
        p = instantiate(p, bindings)
    f = parse_expectation(post)
    den = transformer.cwp(p, f, {})
    op = solver.conditional_expected_reward(build(p, {}, f))
    return den, op


def test_observe_placement_gives_same_value_by_both_engines():
    start = time.perf_counter()
    for name in ("p_obs1", "p_obs2"):
        den, op = analyze_both(name, "x")
        assert den == Exact(Fraction(1))
        assert op == Exact(Fraction(1))
    assert time.perf_counter() - start < 0.1


def test_branch_observe_pair_and_conditional_value():
    p = corpus.program("branch_observe")
    num, den = transformer.cwp_pair(p, parse_expectation("10 + x"))
    # wp and wlp(1) do not depend on the initial state
    assert ex.eval_exp(num.value, {}) == Fraction(27, 4)
    assert ex.eval_exp(den.value, {}) == Fraction(13, 20)
    assert transformer.cwp(p, parse_expectation("10 + x"), {}) == Exact(Fraction(135, 13))


def test_abort_coin_quotient_table():
    t = transformer.quotient_table(corpus.program("abort_coin"), parse_expectation("[y=0]"), {})
    assert t.values == tuple(Exact(Fraction(v)) for v in ("2/7", "6/7", "2/3", "2"))


def test_divergence_gives_zero_and_null_feasibility_undefined():
    assert analyze_both("p_div", "1") == (Exact(Fraction(0)), Exact(Fraction(0)))
    assert analyze_both("p_andiv", "1") == (UNDEFINED, UNDEFINED)


def test_nondet_param_scheduler_values():
    p = instantiate(corpus.program("nondet_param"), {"q": Fraction(1, 2)})
    m = build(p, {}, parse_expectation("x"))
    (nd,) = m.nondeterministic_states()
    values = {c[nd]: v for c, v in solver.scheduler_values(m)}
    assert values == {"left": Exact(Fraction(5)), "right": UNDEFINED}
    value, choice = solver.min_conditional(m)
    assert value is UNDEFINED
    assert choice == {nd: "right"}


def test_context_dependence_model():
    m = corpus.model("context_dependence")
    values = sorted(v.value for _, v in solver.scheduler_values(m))
    assert values == [Fraction(7, 5), Fraction(3, 2)]
    value, _ = solver.min_conditional(m)
    assert value == Exact(Fraction(7, 5))
    sub = m.with_initial(2)
    assert sorted(v.value for _, v in solver.scheduler_values(sub)) == [Fraction(2), Fraction(11, 5)]
    value, choice = solver.min_conditional(sub)
    assert value == Exact(Fraction(2))
    assert list(choice.values()) == ["left"]


def test_hoist_branch_observe():
    p = corpus.program("branch_observe")
    res = transform.hoist(p)
    probs = [s.prob for s in walk(res.program) if isinstance(s, PChoice)]
    assert probs[0] == Const(Fraction(8, 13))
    assert ex.is_constant(res.h) and ex.constant_value(res.h) == Fraction(13, 20)
    hp = Program.from_stmt(res.program, extra_vars=p.variables)
    assert solver.expected_reward(build(hp, {}, parse_expectation("10 + x"))) == Fraction(135, 13)


def test_two_coins_observed_matches_formula():
    base = corpus.program("two_coins_observed")
    for p, q in [(Fraction(1, 2), Fraction(1, 2)), (Fraction(1, 3), Fraction(1, 4))]:
        expected = p * q / (p * q + (1 - p) * (1 - q))
        den, op = analyze_both("two_coins_observed", "[x=0]", {"p": p, "q": q})
        assert den == op == Exact(expected)
        assert transformer.cwp(instantiate(base, {"p": p, "q": q}), parse_expectation("[x=0]"), {}) == Exact(expected)
    assert expected == Fraction(1, 7)


def crowds_closed_form(p, c, k):
    a = p * (1 - c)
    return (1 - c) * (1 - p) * (1 - a**k) / (1 - a) / (1 - p**k)


def test_crowds_bounds_converge_to_closed_form():
    tol = Fraction(1, 10**6)
    f = parse_expectation("[intercepted=0]")
    for p, c, k in [("1/2", "1/2", 2), ("0.8", "0.1", 10), ("0.6", "0.2", 5)]:
        p, c = parse_rational(p), parse_rational(c)
        start = time.perf_counter()
        prog = instantiate(corpus.program("crowds"), {"p": p, "c": c, "k": k})
        v, _ = solver.converge(ModelBuilder(prog, {}, f), Fraction(1), tol)
        assert time.perf_counter() - start < 5
        assert isinstance(v, Interval) and v.width < tol
        assert v.contains(crowds_closed_form(p, c, k))


def test_property_suites():
    start = time.perf_counter()
    plan = {
        "correspondence": 200,
        "decoupling": 200,
        "observe-mass": 200,
        "linearity": 200,
        "deobserve": 200,
        "unrolling": 50,
    }
    for prop, n in plan.items():
        report = checks.run(prop, n)
        assert report.ok, str(report)
    assert time.perf_counter() - start < 60


def test_round_trips():
    assert checks.run("parser", 1000).ok
    assert checks.run("model-format", 100).ok
