"""
Executable cross-validation suites.

Each suite draws seeded random instances and compares two independent
computations of the same quantity, usually the symbolic transformer against
the operational model.  A suite stops at the first counterexample.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional

from . import expectation as ex
from . import randprog as R
from . import solver, transform, transformer
from .operational import build, load_explicit, save_explicit
from .parser import parse
from .syntax import Program, has_observe, pretty_print
from .values import Exact, quotient

DEFAULT_SEED = 2024
UNROLL_DEPTHS = 6


@dataclass
class CheckReport:
    prop: str
    n: int
    passed: int
    counterexample: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.counterexample is None and self.passed == self.n

    def __str__(self):
        status = "pass" if self.ok else "FAIL"
        out = f"{self.prop}: {status} ({self.passed}/{self.n})"
        if self.counterexample:
            out += "\n" + self.counterexample
        return out


def _describe(p, state=None, f=None, extra="") -> str:
    lines = ["program:", pretty_print(p)]
    if state is not None:
        lines.append(f"state: {state}")
    if f is not None:
        lines.append(f"post: {f}")
    if extra:
        lines.append(extra)
    return "\n".join(lines)


def _instance(seed: int, i: int):
    rng = R.rng_for(seed, i)
    p = R.gen_program(rng)
    state = R.gen_state(rng, p.variables)
    f = R.gen_expectation(rng, p.variables)
    return rng, p, state, f


def _value_at(result, state) -> Fraction:
    return ex.eval_exp(result.value, state)


def _cwp_value(p, f, state, den=None):
    num = _value_at(transformer.wp(p, f), state)
    if den is None:
        den = _value_at(transformer.wlp(p, ex.ONE), state)
    return quotient(num, den), den


def check_correspondence(n: int, seed: int) -> Optional[str]:
    """Expected reward of the model equals wp; conditional reward equals cwp."""
    for i in range(n):
        _, p, state, f = _instance(seed, i)
        m = build(p, state, f)
        wp_val = _value_at(transformer.wp(p, f), state)
        er = solver.expected_reward(m)
        if er != wp_val:
            return i, _describe(p, state, f, f"wp = {wp_val}, expected reward = {er}")
        cwp_val, _ = _cwp_value(p, f, state)
        cer = solver.conditional_expected_reward(m)
        if cer != cwp_val:
            return i, _describe(p, state, f, f"cwp = {cwp_val}, conditional reward = {cer}")
    return None


def check_decoupling(n: int, seed: int) -> Optional[str]:
    """The paired transformer equals (wp, wlp) componentwise on 20 states each."""
    for i in range(n):
        rng, p, _, f = _instance(seed, i)
        g = R.gen_expectation(rng, p.variables, bounded=True)
        a, b = transformer.cwp_pair(p, f, g)
        wp_f = transformer.wp(p, f).value
        wlp_g = transformer.wlp(p, g).value
        for _ in range(20):
            s = R.gen_state(rng, p.variables)
            if ex.eval_exp(a.value, s) != ex.eval_exp(wp_f, s) or ex.eval_exp(b.value, s) != ex.eval_exp(wlp_g, s):
                return i, _describe(p, s, f, f"liberal post: {g}")
    return None


def check_observe_mass(n: int, seed: int) -> Optional[str]:
    """wlp(P, 1) equals the probability of never violating an observation."""
    for i in range(n):
        _, p, state, _ = _instance(seed, i)
        lhs = _value_at(transformer.wlp(p, ex.ONE), state)
        rhs = 1 - solver.reach_prob(build(p, state), "bad")
        if lhs != rhs:
            return i, _describe(p, state, None, f"wlp(1) = {lhs}, 1 - Pr(bad) = {rhs}")
    return None


def check_linearity(n: int, seed: int) -> Optional[str]:
    """cwp is linear and monotone in the post-expectation on feasible instances."""
    for i in range(n):
        rng, p, state, f = _instance(seed, i)
        g = R.gen_expectation(rng, p.variables)
        a, b = Fraction(rng.randint(0, 4), 2), Fraction(rng.randint(0, 4), 3)
        cf, den = _cwp_value(p, f, state)
        if den == 0:
            continue
        cg, _ = _cwp_value(p, g, state, den)
        combo, _ = _cwp_value(p, ex.add(ex.scale(a, f), ex.scale(b, g)), state, den)
        if combo.value != a * cf.value + b * cg.value:
            return i, _describe(p, state, f, f"linearity fails with g = {g}, a = {a}, b = {b}")
        bigger, _ = _cwp_value(p, ex.add(f, g), state, den)
        if bigger.value < cf.value:
            return i, _describe(p, state, f, f"monotonicity fails with f + {g}")
    return None


def check_deobserve(n: int, seed: int) -> Optional[str]:
    """cwp equals the expected reward of the rejection-loop program on feasible instances."""
    for i in range(n):
        _, p, state, f = _instance(seed, i)
        cwp_val, den = _cwp_value(p, f, state)
        if den == 0:
            continue
        q = transform.observe_to_loop(p)
        val = solver.expected_reward(build(q, state, f))
        if cwp_val != Exact(val):
            return i, _describe(p, state, f, f"cwp = {cwp_val}, rejection loop = {val}")
    return None


def check_hoist(n: int, seed: int) -> Optional[str]:
    """Hoisted programs compute cwp and the liberal quotient; the side expectation is wlp(P, 1)."""
    for i in range(n):
        rng, p, state, f = _instance(seed, i)
        g = R.gen_expectation(rng, p.variables, bounded=True)
        res = transform.hoist(p)
        if has_observe(res.program):
            return i, _describe(p, extra="hoisted program still observes")
        den = _value_at(transformer.wlp(p, ex.ONE), state)
        if ex.eval_exp(res.h, state) != den:
            return i, _describe(p, state, None, f"h = {res.h}, wlp(1) = {den}")
        if den == 0:
            continue
        hp = Program.from_stmt(res.program, extra_vars=p.variables)
        cwp_val, _ = _cwp_value(p, f, state)
        op = solver.expected_reward(build(hp, state, f))
        if cwp_val != Exact(op):
            return i, _describe(p, state, f, f"cwp = {cwp_val}, hoisted wp = {op}")
        lib = _value_at(transformer.wlp(p, g), state) / den
        op_lib = solver.liberal_expected_reward(build(hp, state, g))
        if lib != op_lib:
            return i, _describe(p, state, g, f"liberal quotient = {lib}, hoisted wlp = {op_lib}")
    return None


def check_unrolling(n: int, seed: int) -> Optional[str]:
    """Unrolled loop bounds improve monotonically with the unrolling depth."""
    for i in range(n):
        rng = R.rng_for(seed, i)
        p = R.gen_loopy_program(rng)
        f = R.gen_expectation(rng, p.variables, bounded=True)
        states = [R.gen_state(rng, p.variables) for _ in range(5)]
        prev_lo = prev_hi = None
        for k in range(1, UNROLL_DEPTHS + 1):
            lo_exp = transformer.wp(p, f, k, accelerate=False).value
            hi_exp = transformer.wlp(p, f, k, accelerate=False).value
            lo = [ex.eval_exp(lo_exp, s) for s in states]
            hi = [ex.eval_exp(hi_exp, s) for s in states]
            if prev_lo and (any(a < b for a, b in zip(lo, prev_lo)) or any(a > b for a, b in zip(hi, prev_hi))):
                return i, _describe(p, None, f, f"bounds not monotone at unrolling depth {k}")
            if any(a > b for a, b in zip(lo, hi)):
                return i, _describe(p, None, f, f"lower bound above upper bound at depth {k}")
            prev_lo, prev_hi = lo, hi
    return None


def check_parser_roundtrip(n: int, seed: int) -> Optional[str]:
    for i in range(n):
        p = R.gen_ast(R.rng_for(seed, i))
        text = pretty_print(p)
        if parse(text).body != p.body:
            return i, "program:\n" + text
    return None


def check_model_roundtrip(n: int, seed: int) -> Optional[str]:
    for i in range(n):
        text = save_explicit(R.gen_model(R.rng_for(seed, i)))
        if save_explicit(load_explicit(text)) != text:
            return i, "model:\n" + text
    return None


SUITES: Dict[str, Callable[[int, int], Optional[str]]] = {
    "correspondence": check_correspondence,
    "decoupling": check_decoupling,
    "observe-mass": check_observe_mass,
    "linearity": check_linearity,
    "deobserve": check_deobserve,
    "hoist": check_hoist,
    "unrolling": check_unrolling,
    "parser": check_parser_roundtrip,
    "model-format": check_model_roundtrip,
}


def run(prop: str, n: int, seed: int = DEFAULT_SEED) -> CheckReport:
    found = SUITES[prop](n, seed)
    if found is None:
        return CheckReport(prop, n, n)
    i, text = found
    return CheckReport(prop, n, i, f"counterexample (instance {i}, seed {seed}):\n{text}")


def run_all(n: int, seed: int = DEFAULT_SEED, props: Optional[List[str]] = None) -> List[CheckReport]:
    return [run(p, n, seed) for p in (props or list(SUITES))]
