"""Convex relaxation of budgeted sensor selection, with top-K rounding.

Selecting K of n measurement rows to minimize the posterior MSE
Tr((P_pred^-1 + sum_{j in S} h_j h_j^T / sigma_j^2)^-1) relaxes, by letting
each row carry a fractional weight z_j in [0, 1] with sum z = K, to the
semidefinite program

    minimize    Tr(Y)
    subject to  0 <= z <= 1,  sum(z) = K,
                [[Y, I], [I, F(z)]] >= 0   (positive semidefinite)

where F(z) = P_pred^-1 + sum_j z_j h_j h_j^T / sigma_j^2. The Schur
complement makes the block constraint equivalent to Y >= F(z)^-1, so the
optimum equals the relaxed MSE and lower-bounds the best achievable by any
integral selection of size K. Rounding the K largest weights back to an
integral selection gives the upper half of the sandwich:

    Tr(Y)  <=  MSE(optimal K-subset)  <=  MSE(top-K rounding).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .io import ParameterError, parse_instance

_Z_TOL = 1e-6
_PREFERRED_SOLVERS = ("CLARABEL", "SCS")


class SolverError(RuntimeError):
    """The convex solver failed or returned a non-optimal status."""

    def __init__(self, status: str, message: str) -> None:
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class SdpSolution:
    """A solved relaxation: fractional weights, bound value, provenance."""

    z: np.ndarray
    objective: float
    status: str
    wall_time_s: float
    k: int
    solver: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=np.float64)
        object.__setattr__(self, "z", z)
        if z.ndim != 1:
            raise ParameterError(f"z must be a vector, got shape {z.shape}")
        if z.min() < -_Z_TOL or z.max() > 1.0 + _Z_TOL:
            raise ParameterError(
                f"weights leave [0,1] beyond tolerance {_Z_TOL}: "
                f"range [{z.min():.3e}, {z.max():.3e}]"
            )
        if abs(float(z.sum()) - self.k) > _Z_TOL:
            raise ParameterError(
                f"weights sum to {z.sum():.9f}, expected {self.k} within {_Z_TOL}"
            )
        if not self.objective > 0.0:
            raise ParameterError(f"objective must be > 0, got {self.objective}")
        z.flags.writeable = False


def _build_problem(p_pred: np.ndarray, rows: np.ndarray, r_diag: np.ndarray,
                   k: int) -> tuple[cp.Problem, cp.Variable, cp.Variable]:
    m = p_pred.shape[0]
    p_inv = np.linalg.inv(p_pred)
    p_inv = (p_inv + p_inv.T) / 2.0
    scaled = rows / np.sqrt(r_diag)[:, None]
    z = cp.Variable(rows.shape[0], name="z")
    y = cp.Variable((m, m), symmetric=True, name="Y")
    f_z = cp.Constant(p_inv) + scaled.T @ cp.diag(z) @ scaled
    eye = np.eye(m)
    constraints = [
        z >= 0,
        z <= 1,
        cp.sum(z) == k,
        cp.bmat([[y, eye], [eye, f_z]]) >> 0,
    ]
    return cp.Problem(cp.Minimize(cp.trace(y)), constraints), z, y


def solve_sdp(instance_file: str, K: int | None = None, step: int = 1,
              solver: str | None = None) -> SdpSolution:
    """Solve the relaxation for one step of an instance file.

    K defaults to the instance's stored budget. `solver` forces a cvxpy
    solver by name; by default the first available of CLARABEL, SCS is used.
    """
    inst = parse_instance(instance_file)
    k = inst.K if K is None else int(K)
    if not 1 <= k <= inst.n:
        raise ParameterError(f"need 1 <= K <= {inst.n}, got {k}")
    p_pred = inst.predicted_prior(step)
    rows = inst.H_at(step)

    problem, z, _ = _build_problem(p_pred, rows, inst.R_diag, k)
    names = (solver,) if solver else _PREFERRED_SOLVERS
    chosen = next((s for s in names if s in cp.installed_solvers()), None)
    if chosen is None:
        raise SolverError("unavailable", f"no solver among {names} is installed")

    start = time.perf_counter()
    try:
        problem.solve(solver=chosen)
    except cp.error.SolverError as exc:
        raise SolverError("solver_error", str(exc)) from exc
    elapsed = time.perf_counter() - start
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise SolverError(problem.status, f"{chosen} returned status {problem.status!r}")
    return SdpSolution(
        z=np.asarray(z.value, dtype=np.float64),
        objective=float(problem.value),
        status=str(problem.status),
        wall_time_s=elapsed,
        k=k,
        solver=chosen,
    )


def round_topk(z, K: int) -> list[int]:
    """Indices of the K largest weights, lowest index first among ties,
    returned in ascending order."""
    arr = np.asarray(z, dtype=np.float64)
    if arr.ndim != 1:
        raise ParameterError(f"z must be a vector, got shape {arr.shape}")
    if not 1 <= K <= arr.size:
        raise ParameterError(f"need 1 <= K <= {arr.size}, got {K}")
    top = np.argsort(-arr, kind="stable")[:K]
    return sorted(int(j) for j in top)
