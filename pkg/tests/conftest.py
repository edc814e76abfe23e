"""Shared oracles and fixtures.

The oracle helpers recompute everything the library maintains incrementally
(inverse information matrices, objective values, marginal gains) by direct
matrix inversion, so the tests never trust the code path they are checking.
"""

from __future__ import annotations

import numpy as np
import pytest

# ---------------------------------------------------------------------------
# direct-inversion oracles


def direct_f_inv(p_pred, rows, r_diag, selected) -> np.ndarray:
    """F_S^-1 = (P^-1 + sum_{j in S} h_j h_j' / sigma_j^2)^-1, no shortcuts."""
    p_pred = np.asarray(p_pred, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.float64)
    r_diag = np.asarray(r_diag, dtype=np.float64)
    f = np.linalg.inv(p_pred)
    for j in selected:
        h = rows[j]
        f = f + np.outer(h, h) / r_diag[j]
    return np.linalg.inv(f)


def direct_f(p_pred, rows, r_diag, selected) -> float:
    """f(S) = Tr(P) - Tr(F_S^-1) by direct inversion."""
    p_pred = np.asarray(p_pred, dtype=np.float64)
    return float(np.trace(p_pred) - np.trace(direct_f_inv(p_pred, rows, r_diag, selected)))


def direct_gain(p_pred, rows, r_diag, selected, j) -> float:
    """f(S + j) - f(S) as two independent direct evaluations."""
    base = direct_f(p_pred, rows, r_diag, selected)
    return direct_f(p_pred, rows, r_diag, tuple(selected) + (j,)) - base


def random_spd(rng: np.random.Generator, m: int, scale: float = 1.0) -> np.ndarray:
    """Well-conditioned random SPD matrix."""
    b = rng.standard_normal((m, m))
    mat = (b @ b.T) / m + 0.5 * np.eye(m)
    return scale * (mat + mat.T) / 2.0


def random_problem(rng: np.random.Generator, m: int, n: int):
    """(p_pred, rows, r_diag) with generic spectra and noise levels."""
    p_pred = random_spd(rng, m)
    rows = rng.standard_normal((n, m)) / np.sqrt(m)
    r_diag = rng.uniform(0.5, 1.5, size=n)
    return p_pred, rows, r_diag


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20250825)


# ---------------------------------------------------------------------------
# acceptance reporting: every acceptance test records one PASS/FAIL line and
# the terminal summary reprints them so the outcome survives output capture

ACCEPTANCE_LINES: list[str] = []


def record_result(label: str, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'}: {label} [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance checks")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
