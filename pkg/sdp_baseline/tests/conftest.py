"""Shared fixtures for the baseline's tests.

Mirrors the scheduler suite's reporting convention: interop checks print one
PASS/FAIL line each, reprinted in the terminal summary.
"""

import json
import shutil
import subprocess
from itertools import combinations

import numpy as np
import pytest

BASELINE_LINES: list[str] = []

KSCHED = shutil.which("ksched")

needs_scheduler_cli = pytest.mark.skipif(
    KSCHED is None, reason="the ksched console script is not on PATH"
)


def record_result(label: str, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'}: {label} [{detail}]"
    BASELINE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if BASELINE_LINES:
        terminalreporter.section("baseline interop checks")
        for line in BASELINE_LINES:
            terminalreporter.write_line(line)


def run_cli(*argv: str) -> subprocess.CompletedProcess:
    return subprocess.run(list(argv), capture_output=True, text=True)


def scheduler_score(instance_path, selection_path=None, k=None, step=None) -> dict:
    """Score via the scheduler's console script; returns its JSON document."""
    argv = [KSCHED, "score", "--instance", str(instance_path)]
    if selection_path is not None:
        argv += ["--selection", str(selection_path)]
    else:
        argv += ["--exhaustive"]
    if k is not None:
        argv += ["--k", str(k)]
    if step is not None:
        argv += ["--step", str(step)]
    proc = run_cli(*argv)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout)


def exhaustive_mse(p_pred, rows, r_diag, k: int) -> float:
    """Local brute-force oracle (direct inversion, no scheduler import)."""
    p_inv = np.linalg.inv(p_pred)
    best = np.inf
    for subset in combinations(range(rows.shape[0]), k):
        f = p_inv.copy()
        for j in subset:
            f = f + np.outer(rows[j], rows[j]) / r_diag[j]
        best = min(best, float(np.trace(np.linalg.inv(f))))
    return best


@pytest.fixture
def explicit_instance(tmp_path):
    """Write a small explicit-measurement instance file; returns (path, doc)."""

    def build(m=3, n=8, k=3, horizon=1, seed=5, a="identity"):
        rng = np.random.default_rng(seed)
        b = rng.standard_normal((m, m))
        doc = {
            "version": "ksched-instance-v1",
            "m": m, "n": n, "K": k, "horizon": horizon, "seed": seed,
            "A": a,
            "Q": (0.05 * np.eye(m)).tolist(),
            "R_diag": rng.uniform(0.5, 1.5, n).tolist(),
            "Sigma_x": (b @ b.T / m + 0.5 * np.eye(m)).tolist(),
            "H": {
                "kind": "explicit",
                "data": (rng.standard_normal((horizon, n, m)) / np.sqrt(m)).tolist(),
                "source": None,
            },
        }
        path = tmp_path / "instance.json"
        path.write_text(json.dumps(doc) + "\n", encoding="utf-8")
        return path, doc

    return build
