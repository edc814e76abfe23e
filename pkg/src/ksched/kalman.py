"""Kalman recursions restricted to a selected sensor subset.

The covariance measurement update runs in information form through the
rank-one chain of `objective`, so its cost is O(|S| m^2) and it is the exact
quantity the selection objective reasons about. The mean update uses the
standard innovation form; the pure information-form mean expression is exact
only for a zero prior mean, and trace comparisons depend on the covariance
alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ParameterError, ProblemInstance
from .objective import FisherState, NumericalError
from .rng import substream
from .selection import Policy, SelectionResult


@dataclass(frozen=True)
class FilterState:
    x_hat: np.ndarray
    p_filt: np.ndarray
    k: int
    updated: bool = True  # False marks a predict-only (empty selection) step


@dataclass(frozen=True)
class StepRecord:
    step: int
    selected: tuple[int, ...]
    f_value: float
    mse: float  # Tr(P_filt)
    err2: float  # realized squared estimate error
    gain_evals: int
    select_time_s: float
    trace_p_pred: float
    updated: bool


@dataclass(frozen=True)
class RunResult:
    records: tuple[StepRecord, ...]
    x_true: np.ndarray  # (horizon, m) simulated ground truth
    policy_name: str


def predict(state: FilterState, a_k: np.ndarray, q_k: np.ndarray):
    """Time update: x <- A x, P <- A P A' + Q (symmetrized)."""
    a_k = np.asarray(a_k, dtype=np.float64)
    q_k = np.asarray(q_k, dtype=np.float64)
    m = state.x_hat.shape[0]
    if a_k.shape != (m, m) or q_k.shape != (m, m):
        raise ParameterError(f"A and Q must be {m}x{m}")
    x_pred = a_k @ state.x_hat
    p_pred = a_k @ state.p_filt @ a_k.T + q_k
    p_pred = (p_pred + p_pred.T) / 2.0
    return x_pred, p_pred


def update(x_pred, p_pred, selected, h_k, r_diag, y_k, k: int = 0) -> FilterState:
    """Measurement update with the rows in `selected`.

    Empty selection is a predict-only step, flagged via updated=False.
    """
    x_pred = np.asarray(x_pred, dtype=np.float64)
    p_pred = np.asarray(p_pred, dtype=np.float64)
    selected = [int(j) for j in selected]
    if len(selected) == 0:
        return FilterState(x_pred.copy(), p_pred.copy(), k, updated=False)

    state = FisherState(p_pred, h_k, r_diag, check_pd=True)
    for j in selected:
        state.add(j)
    p_filt = state.f_inv.copy()

    h_sel = np.asarray(h_k, dtype=np.float64)[selected]
    r_sel = np.asarray(r_diag, dtype=np.float64)[selected]
    y_sel = np.asarray(y_k, dtype=np.float64)[selected]
    innovation = y_sel - h_sel @ x_pred
    x_hat = x_pred + p_filt @ (h_sel.T @ (innovation / r_sel))
    return FilterState(x_hat, p_filt, k, updated=True)


def _psd_factor(mat: np.ndarray) -> np.ndarray:
    """Factor L with L L' = mat for sampling; tolerates singular PSD input."""
    sym = (mat + mat.T) / 2.0
    try:
        return np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        w, u = np.linalg.eigh(sym)
        if w.min() < -1e-10:
            raise NumericalError(f"covariance not PSD: min eigenvalue {w.min():.3e}")
        return u * np.sqrt(np.clip(w, 0.0, None))


def run_filter(
    instance: ProblemInstance,
    policy: Policy,
    trial_seed: int,
    on_step=None,
) -> RunResult:
    """Simulate ground truth and filter with per-step selection.

    World noise streams depend only on (trial_seed, step), selector streams
    also on the policy name, so different policies on the same trial observe
    identical worlds. Deterministic for fixed (instance, policy, trial_seed).
    """
    m, n, K, horizon = instance.m, instance.n, instance.K, instance.horizon
    q = instance.Q
    r_diag = instance.R_diag
    l_q = _psd_factor(q)
    l_x0 = _psd_factor(instance.Sigma_x)

    x_true = instance.prior_mean() + l_x0 @ substream(trial_seed, "x0").standard_normal(m)
    fs = FilterState(instance.prior_mean(), instance.Sigma_x.copy(), 0)

    records: list[StepRecord] = []
    truth = np.empty((horizon, m))
    for k in range(1, horizon + 1):
        a_k = instance.A_at(k)
        h_k = instance.H_at(k)
        x_pred, p_pred = predict(fs, a_k, q)

        w = l_q @ substream(trial_seed, "w", k).standard_normal(m)
        x_true = a_k @ x_true + w
        truth[k - 1] = x_true
        v = substream(trial_seed, "v", k).standard_normal(n) * np.sqrt(r_diag)
        y_k = h_k @ x_true + v

        sel_rng = substream(trial_seed, "sel", policy.name, k) if policy.uses_rng else None
        result: SelectionResult = policy.select(p_pred, h_k, r_diag, K, sel_rng)
        fs = update(x_pred, p_pred, result.selected, h_k, r_diag, y_k, k)

        err = x_true - fs.x_hat
        rec = StepRecord(
            step=k,
            selected=result.selected,
            f_value=result.f_final,
            mse=float(np.trace(fs.p_filt)),
            err2=float(err @ err),
            gain_evals=result.gain_evals,
            select_time_s=result.wall_time,
            trace_p_pred=float(np.trace(p_pred)),
            updated=fs.updated,
        )
        records.append(rec)
        if on_step is not None:
            on_step(rec)
    return RunResult(tuple(records), truth, policy.name)
