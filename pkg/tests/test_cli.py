import io
import json
from fractions import Fraction

from cpgcl.cli import main, parse_grid


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_analyze_outputs():
    assert run("analyze", "examples/p_obs1.cpgcl", "--post", "x") == (0, "1\n")
    assert run("analyze", "examples/example2.cpgcl", "--post", "10 + x") == (0, "135/13 (≈10.3846)\n")
    assert run("analyze", "examples/abort_coin.cpgcl", "--post", "[y=0]", "--table") == (0, "2/7 6/7 2/3 2\n")


def test_analyze_undefined_and_scheduler():
    code, out = run("analyze", "example1", "--q", "1/2", "--post", "x")
    assert code == 0
    assert out.startswith("Undefined")
    assert "right" in out


def test_analyze_json():
    code, out = run("analyze", "two_coins_observed", "--p", "1/3", "--q", "1/4", "--post", "[x=0]", "--format", "json")
    assert code == 0
    assert json.loads(out)["value"] == "1/7"


def test_parameter_errors(capsys):
    assert run("analyze", "two_coins_observed", "--p", "1/3")[0] == 2
    assert run("analyze", "two_coins_observed", "--p", "1/3", "--q", "1/2", "--r", "1")[0] == 2
    assert "bound" in capsys.readouterr().err


def test_engine_error_exit_code(capsys):
    code, out = run("transform", "deloop", "crowds", "--p", "1/2", "--c", "1/2", "--k", "2")
    assert code == 1 and out == ""
    assert "NotIid(counter)" in capsys.readouterr().err


def test_transform_hoist_output_reparses():
    code, out = run("transform", "hoist", "example2", "--simplify")
    assert code == 0
    assert out.splitlines()[0] == "// h = 13/20"
    assert "[8/13]" in out


def test_bounds_finite_and_truncated():
    code, out = run("bounds", "p_obs1", "--post", "[x = 1]")
    assert out.splitlines() == ["exact (10 states): 1"]
    code, out = run("bounds", "crowds", "--p", "1/2", "--c", "1/2", "--k", "2", "--post", "[intercepted=0]", "--max-states", "20", "--start-states", "8")
    assert code == 0
    assert "note: stopped" in out.splitlines()[-1]


def test_bounds_crowds_converges():
    code, out = run("bounds", "crowds", "--p", "1/2", "--c", "1/2", "--k", "2", "--post", "[intercepted=0]", "--format", "json")
    last = json.loads(out)["rows"][-1]
    lo, hi = Fraction(last["lo"]), Fraction(last["hi"])
    assert lo <= Fraction(5, 12) <= hi and hi - lo < Fraction(1, 10**6)


def test_model_dot():
    code, out = run("model", "example1", "--q", "1/2", "--dot")
    assert code == 0
    assert out.count("[label=\"<") == 11


def test_sweep_grid_and_empty():
    assert parse_grid("1..3") == [1, 2, 3]
    assert parse_grid("0.6,0.8") == [Fraction(3, 5), Fraction(4, 5)]
    code, out = run("sweep", "crowds", "--p", "", "--c", "0.1", "--k", "1", "--post", "[intercepted=0]", "--format", "tsv")
    assert code == 0
    assert out.splitlines()[1:] == []


def test_check_command():
    code, out = run("check", "--property", "parser", "--n", "20")
    assert (code, out) == (0, "parser: pass (20/20)\n")


def test_sweep_crowds_rows_match_closed_form():
    code, out = run("sweep", "crowds", "--p", "0.6,0.8", "--c", "0.1,0.2", "--k", "1..20", "--post", "[intercepted=0]", "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == 0 and len(rows) == 80
    assert [(r["p"], r["c"], r["k"]) for r in rows[:2]] == [("3/5", "1/10", "1"), ("3/5", "1/10", "2")]
    for r in rows:
        p, c, k = Fraction(r["p"]), Fraction(r["c"]), int(r["k"])
        a = p * (1 - c)
        closed = (1 - c) * (1 - p) * (1 - a**k) / (1 - a) / (1 - p**k)
        assert Fraction(r["lo"]) <= closed <= Fraction(r["hi"])
        assert Fraction(r["hi"]) - Fraction(r["lo"]) < Fraction(1, 10**6)
