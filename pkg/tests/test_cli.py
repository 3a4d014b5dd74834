import io
import json
import subprocess
import sys

import pytest

from fuzzysat.cli import main
from fuzzysat.interop import read_model

PATHOLOGICAL = "0.75 <= !p (x1 ->p x2) ->p x3 <= 0.75\n0 <= x3 <= 0.5\n"
TAUT = "1 <= x |l !l x <= 1\n"


@pytest.fixture
def files(tmp_path):
    (tmp_path / "pathological.fz").write_text(PATHOLOGICAL)
    (tmp_path / "taut.fz").write_text(TAUT)
    (tmp_path / "contra.fz").write_text("1 <= x &l !l x <= 1\n")
    (tmp_path / "half.fz").write_text("0.5 <= x &p x <= 0.5\n")
    return tmp_path


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out)
    return code, out.getvalue().splitlines()


def test_solve_pathological(files):
    code, lines = run("solve", files / "pathological.fz")
    assert code == 20 and lines == ["UNSAT"]


def test_solve_tautology_with_model(files):
    code, lines = run("solve", files / "taut.fz", "--model")
    assert code == 10 and lines == ["SAT", "assign x 0/1"]


def test_solve_contradiction(files):
    assert run("solve", files / "contra.fz")[0] == 20


def test_solve_numerical_with_stats_and_json(files):
    code, lines = run("solve", files / "half.fz", "--stats", "--json")
    assert code == 10 and lines[0] == "SAT"
    assert "stat cert numerical" in lines
    data = json.loads(lines[-1])
    assert data["status"] == "SAT" and data["cert"] == "numerical"


def test_solve_unknown_on_tiny_budget(files):
    code, lines = run("solve", files / "half.fz", "--timeout", "1e-9")
    assert lines[0] in ("SAT", "UNKNOWN")
    assert code == {"SAT": 10, "UNKNOWN": 30}[lines[0]]


def test_solve_export_backend(files):
    code, lines = run("solve", files / "pathological.fz", "--backend", "export", "-o", files / "p.fmp")
    assert code == 30 and lines == ["UNKNOWN"]
    assert read_model(files / "p.fmp").sources


def test_export(files):
    assert run("export", files / "taut.fz", "-o", files / "t.fmp") == (0, [])
    assert (files / "t.fmp").read_text().startswith("fmp 1\n")
    assert run("export", files / "taut.fz", "-o", files / "r.fmp", "--rewrite")[0] == 0


def test_check(files):
    code, lines = run("check", files / "taut.fz", "--grid", "4")
    assert code == 10 and lines == ["SAT", "assign x 0/1"]
    code, lines = run("check", files / "half.fz", "--grid", "16")
    assert code == 30 and lines[0] == "UNKNOWN"


def test_check_cap(files):
    code, _ = run("check", files / "pathological.fz", "--cap", "2")
    assert code == 2


def test_verify_model(files):
    (files / "bad.model").write_text("assign x1 1/1\nassign x2 0/1\nassign x3 2/5\n")
    assert run("verify-model", files / "pathological.fz", files / "bad.model")[0] != 0
    (files / "good.model").write_text("SAT\nassign x 3/10\n")
    assert run("verify-model", files / "taut.fz", files / "good.model") == (0, ["certified"])
    (files / "partial.model").write_text("assign y 0\n")
    assert run("verify-model", files / "taut.fz", files / "partial.model")[0] == 1
    (files / "junk.model").write_text("x = 1\n")
    assert run("verify-model", files / "taut.fz", files / "junk.model")[0] == 2


def test_solve_model_round_trips_through_verify(files):
    _, lines = run("solve", files / "taut.fz", "--model")
    (files / "m.model").write_text("\n".join(lines) + "\n")
    assert run("verify-model", files / "taut.fz", files / "m.model")[0] == 0


def test_bench(files):
    (files / "spec.json").write_text('{"seed": 42, "count": 3, "weights": {"&l": 1, "->l": 1}}')
    code, _ = run("bench", "--spec", files / "spec.json", "--csv", files / "out.csv",
                  "--instances", files / "inst")
    assert code == 0
    lines = (files / "out.csv").read_text().splitlines()
    assert lines[0] == "id,n_vars,n_clauses,logic,verdict,cert,nodes,wall_ms"
    assert len(lines) == 5 and len(list((files / "inst").iterdir())) == 3


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["solve"], ["solve", "x.fz", "--epsilon", "-1"],
    ["solve", "x.fz", "--threads", "0"], ["solve", "x.fz", "--bogus"], ["export", "x.fz"],
])
def test_usage_errors(argv, capsys):
    assert main(argv, io.StringIO()) == 1
    assert capsys.readouterr().err


def test_unknown_backend(files, capsys):
    assert run("solve", files / "taut.fz", "--backend", "gurobi")[0] == 1


def test_input_errors(files, capsys):
    assert run("solve", files / "missing.fz")[0] == 2
    (files / "broken.fz").write_text("0 <= a & b <= 1\n")
    assert run("solve", files / "broken.fz")[0] == 2
    assert "line 1, column 8" in capsys.readouterr().err
    (files / "spec.json").write_text('{"n": 0}')
    assert run("bench", "--spec", files / "spec.json", "--csv", files / "o.csv")[0] == 2


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "fuzzysat", "solve", str(files / "taut.fz")],
                          capture_output=True, text=True)
    assert proc.returncode == 10 and proc.stdout.splitlines()[0] == "SAT"
