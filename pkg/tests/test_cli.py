"""Command-line interface: artifact round trips, scoring semantics, and exit
codes. Everything runs in-process through main() except one console-script
smoke check."""

import json
import subprocess

import numpy as np
import pytest

from ksched.cli import main
from ksched.model import load_instance, predicted_prior, save_selection
from ksched.objective import score_selection
from ksched.selection import exhaustive_select


def _gen(tmp_path, *extra):
    args = ["gen", "--m", "3", "--n", "8", "--k", "3", "--horizon", "2",
            "--seed", "42", "--out", str(tmp_path)]
    args += list(extra)
    assert main(args) == 0
    return str(tmp_path / "instance.json")


# ---------------------------------------------------------------------------
# gen


def test_gen_writes_loadable_instance(tmp_path, capsys):
    path = _gen(tmp_path)
    doc = json.loads(capsys.readouterr().out)
    assert doc["instance"] == path
    inst = load_instance(path)
    assert (inst.m, inst.n, inst.K, inst.horizon) == (3, 8, 3, 2)


def test_gen_generator_mode_equivalent(tmp_path, capsys):
    explicit = _gen(tmp_path / "a", "--h-mode", "explicit")
    compact = _gen(tmp_path / "b", "--h-mode", "generator")
    capsys.readouterr()
    a, b = load_instance(explicit), load_instance(compact)
    assert np.array_equal(a.H, b.H)
    assert (tmp_path / "b" / "instance.json").stat().st_size < \
        (tmp_path / "a" / "instance.json").stat().st_size


# ---------------------------------------------------------------------------
# score


def test_score_selection_file_round_trip(tmp_path, capsys):
    inst_path = _gen(tmp_path)
    capsys.readouterr()
    sel_path = tmp_path / "sel.json"
    save_selection(str(sel_path), (4, 1, 6), K=3, step=2)
    out_path = tmp_path / "score.json"
    assert main(["score", "--instance", inst_path, "--selection", str(sel_path),
                 "--out", str(out_path)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc == json.loads(out_path.read_text())
    assert doc["step"] == 2 and doc["K"] == 3 and doc["source"] == "selection-file"
    assert doc["selected"] == [1, 4, 6]

    inst = load_instance(inst_path)
    p = predicted_prior(inst, 2)
    f, mse = score_selection(p, inst.H_at(2), inst.R_diag, (4, 1, 6))
    assert doc["f_value"] == pytest.approx(f, rel=1e-12)
    assert doc["mse"] == pytest.approx(mse, rel=1e-12)


def test_score_exhaustive_is_a_lower_bound(tmp_path, capsys):
    inst_path = _gen(tmp_path)
    capsys.readouterr()
    sel_path = tmp_path / "sel.json"
    save_selection(str(sel_path), (0, 1, 2), K=3, step=1)
    assert main(["score", "--instance", inst_path, "--selection", str(sel_path)]) == 0
    picked = json.loads(capsys.readouterr().out)
    assert main(["score", "--instance", inst_path, "--exhaustive", "--step", "1"]) == 0
    optimal = json.loads(capsys.readouterr().out)
    assert optimal["source"] == "exhaustive"
    assert optimal["mse"] <= picked["mse"] + 1e-12
    inst = load_instance(inst_path)
    res = exhaustive_select(predicted_prior(inst, 1), inst.H_at(1), inst.R_diag, 3)
    assert sorted(res.selected) == optimal["selected"]


def test_score_argument_validation(tmp_path, capsys):
    inst_path = _gen(tmp_path)
    sel_path = tmp_path / "sel.json"
    save_selection(str(sel_path), (0,), K=1, step=1)
    capsys.readouterr()
    # exactly one of --selection / --exhaustive
    assert main(["score", "--instance", inst_path]) == 2
    assert main(["score", "--instance", inst_path, "--selection", str(sel_path),
                 "--exhaustive"]) == 2
    # step outside the horizon
    assert main(["score", "--instance", inst_path, "--exhaustive", "--step", "9"]) == 2
    err = capsys.readouterr().err
    assert "exactly one" in err and "horizon" in err


# ---------------------------------------------------------------------------
# experiment subcommands (tiny, deterministic configurations)


def test_run_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "run_out"
    code = main(["run", "--m", "3", "--n", "8", "--k", "3", "--horizon", "2",
                 "--trials", "2", "--seed", "7", "--policies", "greedy,random",
                 "--out", str(out)])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["experiment"] == "tracking"
    csv_lines = (out / "tracking.csv").read_text().splitlines()
    assert csv_lines[0].startswith("experiment,policy,eps")
    assert len(csv_lines) == 1 + 2 * 2 * 2  # header + trials x policies x steps
    assert json.loads((out / "tracking_summary.json").read_text()) == summary


def test_hist_single_epsilon_exits_clean(tmp_path, capsys):
    out = tmp_path / "hist_out"
    code = main(["hist", "--m", "3", "--n", "8", "--k", "3", "--eps", "0.5",
                 "--trials", "3", "--seed", "5", "--out", str(out)])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["runs_per_eps"] == 3
    assert (out / "histogram.csv").exists()


def test_scale_tiny_exits_clean(tmp_path, capsys):
    code = main(["scale", "--m", "3", "--n", "12", "--k", "3", "--eps", "0.5",
                 "--gamma-max", "2", "--repeats", "1", "--seed", "3"])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["gamma_values"] == [1, 2]
    assert "gamma_2" in summary


def test_curv_reports_factors(capsys):
    code = main(["curv", "--m", "3", "--n", "6", "--k", "3", "--eps", "0.5",
                 "--seed", "1"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["n"] == 6
    assert doc["c"] >= 1.0
    assert doc["alpha"] is not None and doc["s"] is not None


def test_sweep_tiny(tmp_path, capsys):
    out = tmp_path / "sweep_out"
    code = main(["sweep", "--m", "3", "--n", "8", "--horizon", "2",
                 "--trials", "2", "--k-values", "2,4", "--policies", "greedy",
                 "--seed", "11", "--out", str(out)])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["k_values"] == [2, 4]
    assert (out / "budget_sweep.csv").exists()


def test_unknown_command_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["transmogrify"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_eps_list_rejects_garbage(capsys):
    with pytest.raises(SystemExit):
        main(["hist", "--eps", "fast"])
    capsys.readouterr()


def test_console_script_smoke(tmp_path):
    # the installed entry point behaves like main()
    res = subprocess.run(
        ["ksched", "gen", "--m", "3", "--n", "6", "--k", "2", "--horizon", "1",
         "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "instance.json").exists()
