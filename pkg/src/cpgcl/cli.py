"""Command-line interface: analyze, bounds, transform, model, check, sweep."""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from . import checks, corpus, solver, transform, transformer
from . import expectation as ex
from .errors import CpgclError, NonConvergent, QuotientProbabilityUnsupported
from .operational import ModelBuilder, Rmdp, build, export_dot, save_explicit
from .parser import parse, parse_expectation, parse_rational, parse_state
from .syntax import Program, instantiate, is_fully_probabilistic, is_loop_free, pretty_print
from .values import UNDEFINED, AnalysisValue, Exact, Interval, decimal

DEFAULT_MAX_STATES = 200_000
DEFAULT_TOL = "1e-6"


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    command: str
    program: Optional[str] = None
    post: str = "0"
    init: Dict[str, int] = field(default_factory=dict)
    bindings: Dict[str, List[Fraction]] = field(default_factory=dict)
    unroll: int = transformer.DEFAULT_UNROLL
    max_states: int = DEFAULT_MAX_STATES
    post_bound: Optional[Fraction] = None
    tol: Fraction = Fraction(1, 10**6)
    fmt: str = "text"


def parse_grid(text: str) -> List[Fraction]:
    """``0.6,0.8`` or ``1..20`` or a single value; the empty string is the empty grid."""
    out: List[Fraction] = []
    for part in filter(None, (s.strip() for s in text.split(","))):
        if ".." in part:
            lo, hi = part.split("..", 1)
            a, b = parse_rational(lo), parse_rational(hi)
            if a.denominator != 1 or b.denominator != 1:
                raise UsageError(f"range bounds must be integers: {part!r}")
            out.extend(Fraction(i) for i in range(int(a), int(b) + 1))
        else:
            out.append(parse_rational(part))
    return out


def parse_bindings(extra: Sequence[str]) -> Dict[str, List[Fraction]]:
    """Turn leftover ``--name value`` arguments into parameter grids."""
    out: Dict[str, List[Fraction]] = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) <= 2:
            raise UsageError(f"unexpected argument {tok!r}")
        name = tok[2:]
        if "=" in name:
            name, value = name.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise UsageError(f"parameter --{name} needs a value")
            value = extra[i + 1]
            i += 2
        if not name.isidentifier():
            raise UsageError(f"bad parameter name {name!r}")
        if name in out:
            raise UsageError(f"parameter {name} bound twice")
        out[name] = parse_grid(value)
    return out


def load_program(name: str) -> Program:
    return parse(corpus.text(name))


def is_model_file(name: str) -> bool:
    return corpus.path(name).suffix == ".rmdp"


def _check_bindings(p: Program, bindings: Dict[str, object]) -> None:
    unknown = sorted(set(bindings) - set(p.params))
    if unknown:
        raise UsageError(f"unknown parameter(s) {', '.join(unknown)}; the program has {', '.join(p.params) or 'none'}")
    missing = [n for n in p.params if n not in bindings]
    if missing:
        raise UsageError(f"parameter(s) {', '.join(missing)} must be bound, e.g. --{missing[0]} 1/2")


def single_bindings(cfg: RunConfig) -> Dict[str, Fraction]:
    out = {}
    for name, grid in cfg.bindings.items():
        if len(grid) != 1:
            raise UsageError(f"--{name} needs exactly one value here (grids are for sweep)")
        out[name] = grid[0]
    return out


def instantiated(cfg: RunConfig, bindings: Optional[Dict[str, Fraction]] = None) -> Program:
    p = load_program(cfg.program)
    b = single_bindings(cfg) if bindings is None else bindings
    _check_bindings(p, b)
    return instantiate(p, b)


# --------------------------------------------------------------------------
# analysis


@dataclass
class Analysis:
    value: AnalysisValue
    engine: str
    scheduler: Optional[Dict[int, str]] = None
    model: Optional[Rmdp] = None


def _bound_for(f: ex.Expectation, cfg: RunConfig) -> Optional[Fraction]:
    return cfg.post_bound if cfg.post_bound is not None else ex.upper_bound(f)


def analyze_model(m: Rmdp, liberal: bool = False) -> Analysis:
    if m.is_fully_probabilistic():
        return Analysis(solver.conditional_expected_reward(m, liberal), "model", None, m)
    v, choice = solver.min_conditional(m, liberal)
    return Analysis(v, "model", choice, m)


def analyze_program(p: Program, f: ex.Expectation, cfg: RunConfig, engine: str = "auto", liberal: bool = False) -> Analysis:
    """Conditional expected value of ``f``, by the transformer or the operational model."""
    state = dict(cfg.init)
    fp = is_fully_probabilistic(p.body)
    if engine == "transformer" or (engine == "auto" and fp and is_loop_free(p.body)):
        try:
            if liberal:
                return Analysis(_liberal_quotient(p, f, state, cfg.unroll), "transformer")
            return Analysis(transformer.cwp(p, f, state, cfg.unroll, _bound_for(f, cfg)), "transformer")
        except QuotientProbabilityUnsupported:
            if engine == "transformer":
                raise
    builder = ModelBuilder(p, state, f)
    if not fp:
        m = builder.expand(cfg.max_states)
        if m.frontier:
            raise NonConvergent(f"nondeterministic model exceeds {cfg.max_states} states")
        return analyze_model(m, liberal)
    if liberal:
        m = builder.expand(cfg.max_states)
        if m.frontier:
            raise NonConvergent(f"model exceeds {cfg.max_states} states")
        return analyze_model(m, True)
    bound = _bound_for(f, cfg)
    if bound is None:
        m = builder.expand(cfg.max_states)
        if not m.frontier:
            return analyze_model(m)
        if engine == "auto":
            return Analysis(transformer.cwp(p, f, state, cfg.unroll), "transformer")
        raise NonConvergent(f"model exceeds {cfg.max_states} states; supply --post-bound for interval bounds")
    v, m = solver.converge(builder, bound, cfg.tol, cfg.max_states)
    return Analysis(v, "model", None, m)


def _liberal_quotient(p, f, state, unroll) -> AnalysisValue:
    return transformer.quotient_table(p, f, state, unroll).wlp_over_wlp1


# --------------------------------------------------------------------------
# output


def value_record(v: AnalysisValue) -> Dict[str, object]:
    if v is UNDEFINED:
        return {"kind": "undefined", "value": "Undefined"}
    if isinstance(v, Exact):
        return {"kind": "exact", "value": str(v), "decimal": decimal(v.value)}
    return {
        "kind": "interval",
        "lo": str(Exact(v.lo)),
        "hi": str(Exact(v.hi)),
        "lo_decimal": decimal(v.lo),
        "hi_decimal": decimal(v.hi),
        "width": decimal(v.width),
    }


def value_cell(v: AnalysisValue) -> str:
    """Compact single-cell rendering for tables."""
    if isinstance(v, Interval):
        return f"[{decimal(v.lo)}, {decimal(v.hi)}]"
    return str(v)


def _emit(out, fmt: str, text: str, rows: Optional[List[Dict]] = None, header: Optional[List[str]] = None, obj=None):
    if fmt == "json":
        json.dump(obj if obj is not None else rows, out, indent=2)
        out.write("\n")
    elif fmt == "tsv" and header is not None:
        out.write("\t".join(header) + "\n")
        for r in rows or []:
            out.write("\t".join(str(r.get(h, "")) for h in header) + "\n")
    else:
        out.write(text if text.endswith("\n") or not text else text + "\n")


def _scheduler_text(a: Analysis) -> List[str]:
    if not a.scheduler:
        return []
    lines = ["scheduler:"]
    for s, act in sorted(a.scheduler.items()):
        label = str(a.model.states[s]) if a.model else f"state {s}"
        lines.append(f"  {s} {label}: {act}")
    return lines


# --------------------------------------------------------------------------
# commands


def cmd_analyze(cfg: RunConfig, args, out) -> int:
    if is_model_file(cfg.program):
        m = corpus.model(cfg.program)
        if args.start is not None:
            m = m.with_initial(args.start)
        a = analyze_model(m, args.liberal)
    else:
        p = instantiated(cfg)
        f = parse_expectation(cfg.post)
        if args.table:
            t = transformer.quotient_table(p, f, cfg.init, cfg.unroll)
            rows = [{"quotient": n, "value": str(v)} for n, v in zip(t.NAMES, t.values)]
            text = str(t)
            for n, v, bad in zip(t.NAMES, t.values, t.not_a_probability):
                if bad:
                    print(f"note: {n} = {v} exceeds 1", file=sys.stderr)
            _emit(out, cfg.fmt, text, rows, ["quotient", "value"], {n: str(v) for n, v in zip(t.NAMES, t.values)})
            return 0
        a = analyze_program(p, f, cfg, args.engine, args.liberal)
    rec = value_record(a.value)
    rec["engine"] = a.engine
    if a.scheduler is not None:
        rec["scheduler"] = {str(s): act for s, act in sorted(a.scheduler.items())}
    text = "\n".join([a.value.describe()] + _scheduler_text(a))
    _emit(out, cfg.fmt, text, [rec], list(rec), rec)
    return 0


def cmd_bounds(cfg: RunConfig, args, out) -> int:
    p = instantiated(cfg)
    f = parse_expectation(cfg.post)
    bound = _bound_for(f, cfg)
    if bound is None:
        raise UsageError("--post-bound is required for a post-expectation that is not a guarded constant")
    builder = ModelBuilder(p, cfg.init, f)
    rows = []
    size = args.start_states
    while True:
        m = builder.expand(size)
        if builder.complete:
            v = solver.conditional_expected_reward(m)
        else:
            v = solver.bounded_conditional(m, bound)
        rec = {"states": len(m), "frontier": len(m.frontier), **value_record(v)}
        rows.append(rec)
        done = builder.complete or (isinstance(v, Interval) and v.width < cfg.tol) or size >= cfg.max_states
        if cfg.fmt == "text":
            if builder.complete:
                line = f"exact ({len(m)} states): {v.describe()}"
            else:
                line = f"states {len(m)} frontier {len(m.frontier)}: {v.describe()}"
            out.write(line + "\n")
            if done and not builder.complete and not (isinstance(v, Interval) and v.width < cfg.tol):
                out.write(f"note: stopped at --max-states {cfg.max_states} with {len(m.frontier)} unexplored states\n")
        if done:
            break
        size = min(size * 2, cfg.max_states)
    if cfg.fmt != "text":
        header = ["states", "frontier", "kind", "value", "lo", "hi", "width"]
        _emit(out, cfg.fmt, "", rows, header, {"rows": rows})
    return 0


def cmd_transform(cfg: RunConfig, args, out) -> int:
    p = instantiated(cfg)
    h = None
    if args.kind == "hoist":
        f = parse_expectation(args.post) if args.post else ex.ONE
        res = transform.hoist(p, f, args.max_loop_iters)
        body, h = res.program, res.h
        result = Program.from_stmt(body, extra_vars=p.variables)
    elif args.kind == "deobserve":
        result = transform.observe_to_loop(p)
    else:
        result = transform.deloop_program(p)
    body = transform.simplify_stmt(result.body) if args.simplify else result.body
    text = pretty_print(body)
    parse(text, allow_reserved=True)  # the output must be a valid program
    if cfg.fmt == "json":
        obj = {"program": text}
        if h is not None:
            obj["h"] = str(h)
        _emit(out, "json", "", obj=obj)
    else:
        if h is not None:
            text = f"// h = {h}\n{text}"
        out.write(text + "\n")
    return 0


def cmd_model(cfg: RunConfig, args, out) -> int:
    if is_model_file(cfg.program):
        m = corpus.model(cfg.program)
        if args.start is not None:
            m = m.with_initial(args.start)
    else:
        p = instantiated(cfg)
        m = build(p, cfg.init, parse_expectation(cfg.post), cfg.max_states)
    out.write(export_dot(m) if args.dot else save_explicit(m))
    if m.frontier:
        print(f"note: partial model, {len(m.frontier)} unexplored states", file=sys.stderr)
    return 0


def cmd_check(cfg: RunConfig, args, out) -> int:
    props = list(checks.SUITES) if not args.property or "all" in args.property else args.property
    unknown = [p for p in props if p not in checks.SUITES]
    if unknown:
        raise UsageError(f"unknown property {unknown[0]!r}; choose from {', '.join(checks.SUITES)}")
    reports = []
    for prop in props:
        n = args.n if args.n is not None else (50 if prop == "unrolling" else 200)
        reports.append(checks.run(prop, n, args.seed))
    rows = [{"property": r.prop, "status": "pass" if r.ok else "fail", "passed": r.passed, "n": r.n} for r in reports]
    text = "\n".join(str(r) for r in reports)
    _emit(out, cfg.fmt, text, rows, ["property", "status", "passed", "n"], {"results": rows, "counterexamples": {r.prop: r.counterexample for r in reports if r.counterexample}})
    return 0


def _sweep_row(job) -> AnalysisValue:
    cfg, engine, binding = job
    p = instantiated(cfg, binding)
    a = analyze_program(p, parse_expectation(cfg.post), cfg, engine)
    return a.value


def cmd_sweep(cfg: RunConfig, args, out) -> int:
    base = load_program(cfg.program)
    names = list(cfg.bindings)
    _check_bindings(base, {n: None for n in names})
    grid = list(itertools.product(*(cfg.bindings[n] for n in names)))
    jobs = [(cfg, args.engine, dict(zip(names, combo))) for combo in grid]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            values = list(pool.map(_sweep_row, jobs))
    else:
        values = [_sweep_row(j) for j in jobs]
    rows = []
    for combo, v in zip(grid, values):
        rec = {n: str(Exact(x)) for n, x in zip(names, combo)}
        rec.update(value_record(v))
        rec["cell"] = value_cell(v)
        rows.append(rec)
    if cfg.fmt == "json":
        _emit(out, "json", "", obj={"parameters": names, "rows": rows})
    elif cfg.fmt == "tsv":
        header = names + ["kind", "value", "lo", "hi"]
        _emit(out, "tsv", "", rows, header)
    else:
        lines = ["\t".join(names + ["value"])]
        lines += ["\t".join([r[n] for n in names] + [r["cell"]]) for r in rows]
        out.write("\n".join(lines) + "\n")
    return 0


# --------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser, program: bool = True):
    if program:
        p.add_argument("program", help="program file or bundled example name")
    p.add_argument("--post", default="0", help="post-expectation, e.g. '10 + x' or '[x = 0]'")
    p.add_argument("--init", default="", help="initial state, e.g. 'x=1,y=-2' (unlisted variables are 0)")
    p.add_argument("--unroll", type=int, default=transformer.DEFAULT_UNROLL, help="loop unrolling depth")
    p.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)
    p.add_argument("--post-bound", default=None, help="upper bound of the post-expectation")
    p.add_argument("--tol", default=DEFAULT_TOL, help="target interval width")
    p.add_argument("--format", choices=("text", "tsv", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cpgcl",
        allow_abbrev=False,
        description="Analyze probabilistic programs with observations. "
        "Unknown --name value options bind program parameters.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", allow_abbrev=False, help="conditional expected value of a post-expectation")
    _common(a)
    a.add_argument("--table", action="store_true", help="print the four normalization quotients")
    a.add_argument("--engine", choices=("auto", "transformer", "model"), default="auto")
    a.add_argument("--liberal", action="store_true", help="liberal variant (nontermination counts as 1)")
    a.add_argument("--start", type=int, default=None, help="initial state index for explicit models")

    b = sub.add_parser("bounds", allow_abbrev=False, help="interval bounds by growing exploration")
    _common(b)
    b.add_argument("--start-states", type=int, default=256)

    t = sub.add_parser("transform", allow_abbrev=False, help="hoist | deobserve | deloop")
    t.add_argument("kind", choices=("hoist", "deobserve", "deloop"))
    _common(t)
    t.add_argument("--simplify", action="store_true", help="remove dead and duplicate branches")
    t.add_argument("--max-loop-iters", type=int, default=transform.DEFAULT_LOOP_ITERS)
    t.set_defaults(post=None)

    m = sub.add_parser("model", allow_abbrev=False, help="export the operational model")
    _common(m)
    m.add_argument("--dot", action="store_true", help="DOT output instead of the explicit format")
    m.add_argument("--start", type=int, default=None)

    c = sub.add_parser("check", allow_abbrev=False, help="run cross-validation property suites")
    _common(c, program=False)
    c.add_argument("--property", action="append", help="suite name or 'all' (repeatable)")
    c.add_argument("--n", type=int, default=None)
    c.add_argument("--seed", type=int, default=checks.DEFAULT_SEED)

    s = sub.add_parser("sweep", allow_abbrev=False, help="one analysis per parameter combination")
    _common(s)
    s.add_argument("--engine", choices=("auto", "transformer", "model"), default="auto")
    s.add_argument("--jobs", type=int, default=1)
    return ap


def make_config(args, extra) -> RunConfig:
    return RunConfig(
        command=args.command,
        program=getattr(args, "program", None),
        post=args.post if args.post is not None else "0",
        init=parse_state(args.init),
        bindings=parse_bindings(extra),
        unroll=args.unroll,
        max_states=args.max_states,
        post_bound=parse_rational(args.post_bound) if args.post_bound is not None else None,
        tol=parse_rational(args.tol),
        fmt=args.format,
    )


COMMANDS = {
    "analyze": cmd_analyze,
    "bounds": cmd_bounds,
    "transform": cmd_transform,
    "model": cmd_model,
    "check": cmd_check,
    "sweep": cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    try:
        cfg = make_config(args, extra)
        if cfg.bindings and args.command == "check":
            raise UsageError("check takes no parameter bindings")
        return COMMANDS[args.command](cfg, args, out)
    except UsageError as e:
        print(f"cpgcl {args.command}: {e}", file=sys.stderr)
        return 2
    except (CpgclError, FileNotFoundError) as e:
        print(f"cpgcl {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
