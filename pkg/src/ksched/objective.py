"""MSE set objective and its closed-form marginal gains.

For a prior P (the predicted covariance) and scalar sensor rows h_j with noise
variances sigma_j^2, the information matrix of a selection S is

    F_S = P^-1 + sum_{j in S} h_j h_j' / sigma_j^2

and the objective is f(S) = Tr(P) - Tr(F_S^-1), the trace reduction of the
filtered covariance. FisherState maintains F_S^-1 directly through rank-one
inverse updates, so a marginal gain costs one matrix-vector product.
"""

from __future__ import annotations

import numpy as np


class NumericalError(RuntimeError):
    """State corrupted: an invariant that the model guarantees failed."""


def _gain(f_inv: np.ndarray, h: np.ndarray, sigma2: float) -> float:
    # v'v / (sigma^2 + h'v) with v = F^-1 h. Single O(m^2) matvec; both
    # selectors and the public API share this exact arithmetic so that
    # equal candidate sets produce bit-identical gains.
    v = f_inv @ h
    den = sigma2 + h @ v
    if den <= 0.0:
        raise NumericalError(f"nonpositive gain denominator {den}")
    return float((v @ v) / den)


class FisherState:
    """Selected-sensor set with maintained inverse information matrix.

    Value semantics: clone() gives an independent state; add() mutates in
    place and needs exclusive access. Concurrent read-only gain evaluations
    against one state are safe.
    """

    __slots__ = ("f_inv", "p_pred", "rows", "r_diag", "_selected", "_members", "_tr_p")

    def __init__(
        self,
        p_pred: np.ndarray,
        rows: np.ndarray,
        r_diag: np.ndarray,
        *,
        check_pd: bool = False,
    ):
        p_pred = np.asarray(p_pred, dtype=np.float64)
        rows = np.asarray(rows, dtype=np.float64)
        r_diag = np.asarray(r_diag, dtype=np.float64)
        m = p_pred.shape[0]
        if p_pred.shape != (m, m):
            raise ValueError(f"p_pred must be square, got {p_pred.shape}")
        if rows.ndim != 2 or rows.shape[1] != m:
            raise ValueError(f"rows must be (n, {m}), got {rows.shape}")
        if r_diag.shape != (rows.shape[0],):
            raise ValueError("r_diag length must match row count")
        if not (r_diag > 0).all():
            raise ValueError("non-positive variance in r_diag")
        if check_pd:
            try:
                np.linalg.cholesky((p_pred + p_pred.T) / 2.0)
            except np.linalg.LinAlgError as exc:
                raise NumericalError("prior covariance is not positive definite") from exc
        self.f_inv = p_pred.copy()  # F_empty^-1 == P exactly
        self.p_pred = p_pred
        self.rows = rows
        self.r_diag = r_diag
        self._selected: list[int] = []
        self._members: set[int] = set()
        self._tr_p = float(np.trace(p_pred))

    @property
    def m(self) -> int:
        return self.p_pred.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def selected(self) -> tuple[int, ...]:
        return tuple(self._selected)

    def clone(self) -> "FisherState":
        out = FisherState.__new__(FisherState)
        out.f_inv = self.f_inv.copy()
        out.p_pred = self.p_pred
        out.rows = self.rows
        out.r_diag = self.r_diag
        out._selected = list(self._selected)
        out._members = set(self._members)
        out._tr_p = self._tr_p
        return out

    def f_value(self) -> float:
        return self._tr_p - float(np.trace(self.f_inv))

    def mse(self) -> float:
        return float(np.trace(self.f_inv))

    def gain(self, j: int) -> float:
        if j in self._members:
            raise ValueError(f"sensor {j} already selected")
        return _gain(self.f_inv, self.rows[j], float(self.r_diag[j]))

    def add(self, j: int) -> "FisherState":
        if j in self._members:
            raise ValueError(f"sensor {j} already selected")
        h = self.rows[j]
        f = self.f_inv
        v = f @ h
        den = float(self.r_diag[j]) + float(h @ v)
        if den <= 0.0:
            raise NumericalError(f"nonpositive update denominator {den}")
        f -= np.outer(v, v / den)
        # symmetrize to suppress drift over long update chains
        f += f.T
        f *= 0.5
        self._selected.append(int(j))
        self._members.add(int(j))
        return self


def f_value(state: FisherState) -> float:
    """Tr(P) - Tr(F_S^-1); zero for the empty selection."""
    return state.f_value()


def marginal_gain(state: FisherState, j: int) -> float:
    """f(S + j) - f(S) in closed form; >= 0, and > 0 iff h_j != 0."""
    return state.gain(j)


def add_sensor(state: FisherState, j: int) -> FisherState:
    """Rank-one inverse update appending j; mutates and returns `state`."""
    return state.add(j)


def score_selection(
    p_pred: np.ndarray,
    rows: np.ndarray,
    r_diag: np.ndarray,
    selected,
) -> tuple[float, float]:
    """(f, mse) of an arbitrary selection, built through the rank-one chain."""
    state = FisherState(p_pred, rows, r_diag)
    for j in selected:
        state.add(int(j))
    return state.f_value(), state.mse()
