import json
import subprocess
import sys

import pytest

from ltvprop.cli import SELFTEST_CORPUS, run
from ltvprop.output import read_table

RICCATI = {
    "kind": "riccati",
    "dimensions": {"n": 1, "m": 1},
    "coefficients": {"A": [["0"]], "B": [["0"]], "P": [["1"]], "Q": [["0"]]},
    "initial": [[1.0]],
    "interval": [0.0, 1.0],
    "n_intervals": 200,
}
AIRY = {"kind": "propagator", "dimensions": {"n": 2}, "coefficients": {"X": [["0", "1"], ["x", "0"]]},
        "interval": [0.0, 1.0], "n_intervals": 200}


@pytest.fixture
def write(tmp_path):
    def _write(doc, name="p.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc) if isinstance(doc, dict) else doc)
        return str(path)
    return _write


def test_solve_scalar_riccati(write, tmp_path, capsys):
    out = tmp_path / "w.csv"
    assert run(["solve", write(RICCATI), "--out", str(out)]) == 0
    t = read_table(out.read_text())
    assert t.nodes[-1] == 1.0
    assert abs(t.values[-1, 0, 0] - 0.5) <= 1e-9


def test_solve_to_stdout(write, capsys):
    assert run(["solve", write(RICCATI), "--grid", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "x,v_1_1" and len(lines) == 6


def test_verify_airy(write, capsys):
    assert run(["verify", write(AIRY)]) == 0
    out = capsys.readouterr()
    lines = {line.split()[1]: line for line in out.out.splitlines() if line.startswith("INVARIANT")}
    for name in ("det-identity[X]", "inverse-identity[X]"):
        residual = float(lines[name].split("residual=")[1].split()[0])
        assert residual <= 1e-8 and lines[name].endswith("PASS")
    assert "took" in out.err and "took" not in out.out


def test_malformed_expression_exit_1(write, capsys):
    doc = json.loads(json.dumps(RICCATI))
    doc["coefficients"]["P"] = [["sin(x"]]
    assert run(["solve", write(doc)]) == 1
    assert "offset 5" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [[], ["frob"], ["solve"], ["solve", "/nonexistent/p.json"], ["solve", "P", "--grid", "abc"]],
)
def test_usage_errors(argv, write, capsys):
    argv = [write(RICCATI) if a == "P" else a for a in argv]
    assert run(argv) == 1
    assert capsys.readouterr().err


def test_invalid_documents_exit_1(write, capsys):
    assert run(["solve", write("{not json")]) == 1
    assert run(["solve", write(dict(RICCATI, colour="red"))]) == 1
    assert run(["solve", write(RICCATI), "--grid", "7"]) == 1


def test_solver_errors_exit_2(write, capsys):
    assert run(["solve", write(RICCATI), "--max-terms", "1"]) == 2
    log = dict(RICCATI, interval=[0.0, 1.0])
    log["coefficients"] = dict(RICCATI["coefficients"], A=[["ln(x - 0.5)"]])
    assert run(["solve", write(log)]) == 2
    assert "solver error" in capsys.readouterr().err


def test_verification_failure_exit_3(write, capsys):
    # a coarse grid pushes the differencing residual past its tolerance
    doc = dict(AIRY, n_intervals=8)
    doc["coefficients"] = {"X": [["0", "4"], ["-4", "0"]]}
    assert run(["verify", write(doc)]) == 3
    assert "FAIL" in capsys.readouterr().out


def test_propagator_outputs(write, tmp_path, capsys):
    assert run(["propagator", write(AIRY), "--out", str(tmp_path / "airy.csv")]) == 0
    E = read_table((tmp_path / "airy.E.csv").read_text())
    F = read_table((tmp_path / "airy.F.csv").read_text())
    assert E.values.shape == F.values.shape == (201, 2, 2)
    assert run(["propagator", write(RICCATI)]) == 0
    assert capsys.readouterr().out.startswith("# E\nx,")


def test_solve_outputs_are_byte_identical(write, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    path = write(dict(RICCATI, coefficients=dict(RICCATI["coefficients"], A=[["sin(x)"]])))
    assert run(["solve", path, "--out", str(a)]) == 0
    assert run(["solve", path, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_selftest_corpus_names():
    names = [name for name, _, _ in SELFTEST_CORPUS]
    for required in ("scalar-riccati-decay", "harmonic-oscillator", "nilpotent-propagator", "blow-up-family"):
        assert required in names


def test_console_script_selftest():
    first = subprocess.run([sys.executable, "-m", "ltvprop", "selftest"], capture_output=True, text=True)
    second = subprocess.run([sys.executable, "-m", "ltvprop", "selftest"], capture_output=True, text=True)
    assert first.returncode == 0, first.stdout + first.stderr
    assert first.stdout.endswith("SELFTEST PASS\n")
    assert first.stdout == second.stdout
