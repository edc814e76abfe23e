"""Curvature diagnostics and approximation-factor calculators.

The element-wise curvature at gap l is the worst ratio of a late marginal
gain to an early one,

    C_l = max f_i(T) / f_i(S)  over  S subset T, i outside T, |T \\ S| = l.

C_max <= 1 means diminishing returns (submodular); the MSE objective is only
weakly submodular, so C_max may exceed 1 but stays bounded, which is what the
guarantee factors computed here consume. Brute force enumerates the full
subset lattice (3^n subset pairs) and is capped at small n by design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .model import ParameterError
from .selection import EnumerationCapError, beta_exponent, sample_size

_DEFAULT_MAX_N = 12


@dataclass(frozen=True)
class CurvatureReport:
    """Brute-force curvatures plus derived factors; None = not computed."""

    n: int
    C_l: tuple[float, ...]            # l = 1 .. n-1
    C_max: float
    C_of_r: tuple[float, ...]         # r = 1 .. n
    c: float                          # max(C_max, 1)
    zero_rows: tuple[int, ...]
    epsilon: float | None = None
    s: int | None = None
    beta: float | None = None
    alpha: float | None = None
    alpha_greedy: float | None = None
    degenerate_alpha: bool | None = None
    condition_holds: bool | None = None
    bound_phic: float | None = None
    phi: float | None = None
    p_success: float | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "C_l": list(self.C_l),
            "C_max": self.C_max,
            "C_of_r": list(self.C_of_r),
            "c": self.c,
            "zero_rows": list(self.zero_rows),
            "epsilon": self.epsilon,
            "s": self.s,
            "beta": self.beta,
            "alpha": self.alpha,
            "alpha_greedy": self.alpha_greedy,
            "degenerate_alpha": self.degenerate_alpha,
            "condition_holds": self.condition_holds,
            "bound_phic": self.bound_phic,
            "phi": self.phi,
            "p_success": self.p_success,
        }


def subset_tables(p_pred, rows, r_diag, max_n: int = _DEFAULT_MAX_N):
    """(f_table, gain_table) over all 2^n subsets encoded as bitmasks.

    f_table[mask] = f(mask); gain_table[mask, i] = marginal gain of sensor i
    given the subset `mask` (meaningless where i is in mask; callers mask it).
    Built by rank-one chaining each mask from mask-minus-lowest-bit.
    """
    p_pred = np.asarray(p_pred, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.float64)
    r_diag = np.asarray(r_diag, dtype=np.float64)
    n, m = rows.shape
    if n > max_n:
        raise EnumerationCapError(f"n={n} exceeds enumeration cap {max_n} (3^n work)")
    size = 1 << n
    f_inv = np.empty((size, m, m))
    f_inv[0] = (p_pred + p_pred.T) / 2.0
    traces = np.empty(size)
    traces[0] = np.trace(p_pred)
    for mask in range(1, size):
        j = (mask & -mask).bit_length() - 1
        parent = mask ^ (1 << j)
        f = f_inv[parent]
        h = rows[j]
        v = f @ h
        den = r_diag[j] + h @ v
        nxt = f - np.outer(v, v / den)
        nxt = (nxt + nxt.T) * 0.5
        f_inv[mask] = nxt
        traces[mask] = np.trace(nxt)

    ht = np.ascontiguousarray(rows.T)  # (m, n)
    gains = np.empty((size, n))
    for mask in range(size):
        v_all = f_inv[mask] @ ht
        num = np.einsum("ij,ij->j", v_all, v_all)
        den = r_diag + np.einsum("ij,ij->j", ht, v_all)
        gains[mask] = num / den
    f_table = traces[0] - traces
    return f_table, gains


def curvature_bruteforce(
    p_pred, h_k, r_diag, max_n: int = _DEFAULT_MAX_N
) -> CurvatureReport:
    """Exact C_l by full (S, T, i) enumeration using the closed-form gains.

    Rows with h_i = 0 are excluded from the i-range (their gain is zero under
    every subset, giving 0/0 ratios); such instances are flagged via
    zero_rows. Zero rows still participate as subset members, where they
    change nothing but the gap size, exactly as the definition counts them.
    """
    rows = np.asarray(h_k, dtype=np.float64)
    r_arr = np.asarray(r_diag, dtype=np.float64)
    n = rows.shape[0]
    zero_rows = tuple(int(i) for i in np.nonzero((rows == 0.0).all(axis=1))[0])
    _, gains = subset_tables(p_pred, rows, r_arr, max_n=max_n)

    size = 1 << n
    pc = np.zeros(size, dtype=np.int64)
    for mask in range(1, size):
        pc[mask] = pc[mask >> 1] + (mask & 1)

    live = np.array([i for i in range(n) if i not in zero_rows], dtype=np.int64)
    c_by_gap = np.zeros(n)  # index l; slot 0 unused
    for t in range(1, size):
        valid = live[((t >> live) & 1) == 0]
        if valid.size == 0:
            continue
        subs = []
        s = (t - 1) & t
        while True:
            subs.append(s)
            if s == 0:
                break
            s = (s - 1) & t
        subs_arr = np.asarray(subs, dtype=np.int64)
        ratios = gains[t, valid] / gains[subs_arr[:, None], valid[None, :]]
        np.maximum.at(c_by_gap, pc[t] - pc[subs_arr], ratios.max(axis=1))

    c_l = tuple(float(x) for x in c_by_gap[1:n])
    c_max = max(c_l) if c_l else 0.0
    c = max(c_max, 1.0)
    c_of_r = tuple(aggregated_curvature(c_l, r) for r in range(1, n + 1))
    return CurvatureReport(
        n=n, C_l=c_l, C_max=c_max, C_of_r=c_of_r, c=c, zero_rows=zero_rows
    )


def aggregated_curvature(c_l_vector, r: int) -> float:
    """C(r) = (1/r)(1 + sum_{l=1}^{r-1} C_l); C(1) = 1."""
    c_l = [float(x) for x in c_l_vector]
    if not 1 <= r <= len(c_l) + 1:
        raise ParameterError(f"r must be in 1..{len(c_l) + 1}, got {r}")
    return (1.0 + sum(c_l[: r - 1])) / r


def _sym_eigvals(mat) -> np.ndarray:
    mat = np.asarray(mat, dtype=np.float64)
    return np.linalg.eigvalsh((mat + mat.T) / 2.0)


def curvature_bound(p_pred, h_k, r_diag, C: float, phi: float):
    """(condition_holds, bound): when the spectral-budget condition

        lambda_max(H'H) <= (1/phi - 1/lambda_min(P)) * min_j sigma_j^2

    holds for some 0 < phi < lambda_min(P), C_max is guaranteed to be at most

        max_j lambda_max(P)^2 (sigma_j^2 + lambda_max(P) C)
              / (phi^2 (sigma_j^2 + phi C)).
    """
    rows = np.asarray(h_k, dtype=np.float64)
    r_arr = np.asarray(r_diag, dtype=np.float64)
    lam = _sym_eigvals(p_pred)
    lam_min, lam_max = float(lam[0]), float(lam[-1])
    if lam_min < 1e-12:
        raise ParameterError(f"prior not PD: lambda_min = {lam_min:.3e}")
    if not 0.0 < phi < lam_min:
        raise ParameterError(f"phi must be in (0, {lam_min}), got {phi}")
    max_row_norm2 = float((rows * rows).sum(axis=1).max())
    if C < max_row_norm2 * (1.0 - 1e-12):
        raise ParameterError(f"C={C} below max row norm^2 {max_row_norm2}")
    hth_max = float(_sym_eigvals(rows.T @ rows)[-1])
    condition_holds = bool(hth_max <= (1.0 / phi - 1.0 / lam_min) * float(r_arr.min()))
    per_j = lam_max**2 * (r_arr + lam_max * C) / (phi**2 * (r_arr + phi * C))
    return condition_holds, float(per_j.max())


def phi_probabilistic(n: int, m: int, sigma_h2: float, C: float, r_diag, p_pred, q: float):
    """(phi, p_success) for random rows with entry variance sigma_h2 and row
    norms bounded by C: phi = min_j (1/lambda_min(P) + (n sigma_h2 + q)/sigma_j^2)^-1
    is a valid curvature-bound phi with probability at least
    p = 1 - m exp(-q^2/2 / ((C - sigma_h2)(n sigma_h2 + q/3))). p can be <= 0
    for small q and is reported as-is.
    """
    if not (0.0 < sigma_h2 < C):
        raise ParameterError(f"need 0 < sigma_h2 < C, got sigma_h2={sigma_h2}, C={C}")
    if not q > 0:
        raise ParameterError("q must be > 0")
    r_arr = np.asarray(r_diag, dtype=np.float64)
    lam_min = float(_sym_eigvals(p_pred)[0])
    if lam_min < 1e-12:
        raise ParameterError(f"prior not PD: lambda_min = {lam_min:.3e}")
    phi = float((1.0 / (1.0 / lam_min + (n * sigma_h2 + q) / r_arr)).min())
    p = 1.0 - m * math.exp(-(q * q / 2.0) / ((C - sigma_h2) * (n * sigma_h2 + q / 3.0)))
    return phi, p


def condition_number_bound(p_pred, sigma2: float, n: int, m: int, Delta: float, c1: float = 2.0):
    """(premise_holds, Delta^3): if Delta >= kappa(P) + c1 (n/m) SNR, the max
    curvature is at most Delta^3 with high probability; only the cube bound is
    ever checked, the tail constant stays abstract."""
    if not Delta > 1:
        raise ParameterError("Delta must be > 1")
    if not c1 > 1:
        raise ParameterError("c1 must be > 1")
    lam = _sym_eigvals(p_pred)
    lam_min, lam_max = float(lam[0]), float(lam[-1])
    if lam_min < 1e-12:
        raise ParameterError(f"prior not PD: lambda_min = {lam_min:.3e}")
    kappa = lam_max / lam_min
    snr = lam_max / sigma2
    premise = bool(Delta >= kappa + c1 * (n / m) * snr)
    return premise, float(Delta**3)


class ApproxFactor(NamedTuple):
    alpha: float
    alpha_greedy: float
    beta: float
    s: int
    degenerate: bool


def approx_factor(c: float, epsilon: float, n: int, K: int) -> ApproxFactor:
    """Expected-value guarantee factor alpha = 1 - e^{-1/c} - eps^beta / c.

    c is max(C_max, 1); alpha_greedy = 1 - e^{-1/c} is the full-greedy factor.
    alpha is clamped at 0 (degenerate flag set) when huge curvature makes the
    guarantee vacuous.
    """
    if not c >= 1.0:
        raise ParameterError(f"c must be >= 1 (pass max(C_max, 1)), got {c}")
    if not 1 <= K <= n:
        raise ParameterError(f"need 1 <= K <= n, got K={K}, n={n}")
    if not (math.exp(-K) <= epsilon < 1.0):
        raise ParameterError(f"epsilon must be in [e^-K, 1), got {epsilon}")
    s = sample_size(n, K, epsilon)
    beta = beta_exponent(n, s)
    alpha_greedy = 1.0 - math.exp(-1.0 / c)
    raw = alpha_greedy - epsilon**beta / c
    degenerate = raw <= 0.0
    return ApproxFactor(max(0.0, raw), alpha_greedy, beta, s, degenerate)


def mse_bound(alpha: float, mse_opt: float, trace_p_pred: float) -> float:
    """Expected-MSE ceiling alpha * MSE_opt + (1 - alpha) * Tr(P_pred)."""
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must be in [0, 1], got {alpha}")
    if mse_opt > trace_p_pred * (1.0 + 1e-12):
        raise ParameterError("mse_opt cannot exceed the prior trace")
    return alpha * mse_opt + (1.0 - alpha) * trace_p_pred


def curvature_report(
    p_pred,
    h_k,
    r_diag,
    epsilon: float | None = None,
    K: int | None = None,
    phi: float | None = None,
    C: float | None = None,
    sigma_h2: float | None = None,
    q: float | None = None,
    max_n: int = _DEFAULT_MAX_N,
) -> CurvatureReport:
    """One-stop report: brute-force curvatures plus whatever derived factors
    the provided parameters allow."""
    rows = np.asarray(h_k, dtype=np.float64)
    n = rows.shape[0]
    report = curvature_bruteforce(p_pred, rows, r_diag, max_n=max_n)
    fields: dict = {}
    if epsilon is not None and K is not None:
        af = approx_factor(report.c, epsilon, n, K)
        fields.update(
            epsilon=epsilon, s=af.s, beta=af.beta, alpha=af.alpha,
            alpha_greedy=af.alpha_greedy, degenerate_alpha=af.degenerate,
        )
    if C is None:
        C = float((rows * rows).sum(axis=1).max())
    lam_min = float(_sym_eigvals(p_pred)[0])
    if phi is None:
        phi = 0.5 * lam_min
    if phi > 0 and C > 0:
        holds, bound = curvature_bound(p_pred, rows, r_diag, C, phi)
        fields.update(condition_holds=holds, bound_phic=bound)
    if sigma_h2 is not None and q is not None:
        phi_p, p_succ = phi_probabilistic(n, rows.shape[1], sigma_h2, C, r_diag, p_pred, q)
        fields.update(phi=phi_p, p_success=p_succ)
    else:
        fields.update(phi=phi)
    return replace(report, **fields)
