"""Console entry point behavior."""

import json

import pytest

from conftest import run_cli

from sdp_baseline.cli import main


def test_solve_prints_summary_and_writes_selection(explicit_instance, tmp_path, capsys):
    path, _ = explicit_instance(m=3, n=8, k=3)
    out = tmp_path / "sel.json"
    assert main(["solve", "--instance", str(path), "--out", str(out)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["status"] in ("optimal", "optimal_inaccurate")
    assert doc["k"] == 3 and len(doc["z"]) == 8
    assert doc["selected"] == sorted(doc["selected"])
    sel = json.loads(out.read_text(encoding="utf-8"))
    assert sel["version"] == "ksched-selection-v1"
    assert sel["selected"] == doc["selected"]
    assert sel["meta"]["objective"] == pytest.approx(doc["objective"])


def test_solve_without_out_writes_nothing(explicit_instance, tmp_path, capsys):
    path, _ = explicit_instance()
    assert main(["solve", "--instance", str(path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["out"] is None
    assert list(tmp_path.glob("sel*.json")) == []


def test_budget_and_step_flags(explicit_instance, capsys):
    path, _ = explicit_instance(m=3, n=8, k=3, horizon=2)
    assert main(["solve", "--instance", str(path), "--k", "2", "--step", "2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["k"] == 2 and doc["step"] == 2
    assert len(doc["selected"]) == 2


def test_bad_inputs_exit_2(explicit_instance, tmp_path, capsys):
    path, _ = explicit_instance(m=3, n=8, k=3)
    assert main(["solve", "--instance", str(tmp_path / "missing.json")]) == 2
    assert main(["solve", "--instance", str(path), "--k", "99"]) == 2
    capsys.readouterr()


def test_unknown_solver_exits_1(explicit_instance, capsys):
    path, _ = explicit_instance()
    assert main(["solve", "--instance", str(path), "--solver", "NOPE"]) == 1
    assert "solver failed" in capsys.readouterr().err


def test_console_script_smoke(explicit_instance):
    path, _ = explicit_instance()
    proc = run_cli("sdp-baseline", "solve", "--instance", str(path))
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["status"] in ("optimal", "optimal_inaccurate")
