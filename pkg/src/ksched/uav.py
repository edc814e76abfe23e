"""Multi-object tracking scenario: patrol vehicles with range/bearing radar,
budgeted measurement scheduling, and EKF tracking.

Twenty objects random-walk inside a 5 x 10 rectangle while twenty patrol
vehicles sweep vertical lanes (boustrophedon pattern, uniform initial phase).
Each vehicle senses range and bearing to every object within its detection
radius, giving roughly 600 scalar channels per step out of an 800 maximum.
A per-step budget of selected channels feeds independent per-object EKFs;
selection couples the objects only through the shared budget (the global
Fisher state is block-diagonal, 2 x 2 per object).

The all-measurements baseline is the textbook stacked EKF update (dense
innovation covariance solve). Its result is identical to per-object updates
because the stacked system is block-diagonal; the dense form is what a
standard implementation pays when it ingests every channel, which is the cost
structure the selection policies are compared against.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .experiments import ExperimentConfig, ExperimentReport
from .model import ParameterError
from .rng import substream

_MIN_RANGE = 1e-6  # predicted ranges below this give a singular linearization


def wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    out = math.remainder(theta, 2.0 * math.pi)
    if out <= -math.pi:
        out += 2.0 * math.pi
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    object_count: int = 20
    uav_count: int = 20
    width: float = 5.0
    height: float = 10.0
    object_speed: float = 0.2
    uav_speed: float = 0.2
    # Calibrated once via calibrate_detection_radius so the mean per-step
    # channel count lands near 600 (observed ~585-625 across seeds).
    detection_radius: float = 5.4
    sigma_r2: float = 0.05
    sigma_th2: float = 0.05
    q_var: float = 0.05
    init_var: float = 0.5
    budget: int = 100

    def __post_init__(self) -> None:
        if self.object_count < 1 or self.uav_count < 1:
            raise ParameterError("object and vehicle counts must be >= 1")
        if self.width <= 0 or self.height <= 0:
            raise ParameterError("area dimensions must be positive")
        if self.detection_radius <= 0:
            raise ParameterError("detection radius must be positive")
        if min(self.sigma_r2, self.sigma_th2, self.q_var, self.init_var) <= 0:
            raise ParameterError("variances must be positive")
        if self.budget < 1:
            raise ParameterError("budget must be >= 1")


class RadarMeasurement(NamedTuple):
    uav: int
    obj: int
    range_: float
    bearing: float


@dataclass(frozen=True)
class WorldState:
    config: ScenarioConfig
    objects: np.ndarray    # (n_obj, 2) positions
    headings: np.ndarray   # (n_obj,)
    uav_x: np.ndarray      # (n_uav,) fixed lane abscissae
    uav_phase: np.ndarray  # (n_uav,) phase in [0, 2*height)
    t: int = 0

    def uav_positions(self) -> np.ndarray:
        y = _triangle_fold(self.uav_phase, self.config.height)
        return np.column_stack([self.uav_x, y])


def _triangle_fold(phase: np.ndarray, height: float) -> np.ndarray:
    p = np.mod(phase, 2.0 * height)
    return np.where(p <= height, p, 2.0 * height - p)


def _reflect(x: np.ndarray, hi: float) -> np.ndarray:
    # One fold suffices: per-step displacement is far below the box size.
    x = np.abs(x)
    return np.where(x > hi, 2.0 * hi - x, x)


def init_world(config: ScenarioConfig, rng: np.random.Generator) -> WorldState:
    objects = np.column_stack([
        rng.uniform(0.0, config.width, config.object_count),
        rng.uniform(0.0, config.height, config.object_count),
    ])
    headings = rng.uniform(0.0, 2.0 * math.pi, config.object_count)
    lane_gap = config.width / config.uav_count
    uav_x = (np.arange(config.uav_count) + 0.5) * lane_gap
    uav_phase = rng.uniform(0.0, 2.0 * config.height, config.uav_count)
    return WorldState(config, objects, headings, uav_x, uav_phase, 0)


def step_world(world: WorldState, rng: np.random.Generator) -> WorldState:
    cfg = world.config
    headings = rng.uniform(0.0, 2.0 * math.pi, cfg.object_count)
    step = cfg.object_speed * np.column_stack([np.cos(headings), np.sin(headings)])
    moved = world.objects + step
    objects = np.column_stack([
        _reflect(moved[:, 0], cfg.width),
        _reflect(moved[:, 1], cfg.height),
    ])
    uav_phase = np.mod(world.uav_phase + cfg.uav_speed, 2.0 * cfg.height)
    return replace(world, objects=objects, headings=headings,
                   uav_phase=uav_phase, t=world.t + 1)


def _true_geometry(obj_xy: np.ndarray, uav_xy: np.ndarray) -> tuple[float, float]:
    dx = float(obj_xy[0] - uav_xy[0])
    dy = float(obj_xy[1] - uav_xy[1])
    dist = math.hypot(dx, dy)
    bearing = math.atan2(dy, dx) if dist > 0.0 else 0.0
    return dist, bearing


def sense(world: WorldState, rng: np.random.Generator) -> list[RadarMeasurement]:
    """Range/bearing channels for every in-radius (vehicle, object) pair."""
    cfg = world.config
    uavs = world.uav_positions()
    diff = world.objects[:, None, :] - uavs[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    obj_idx, uav_idx = np.nonzero(dist <= cfg.detection_radius)
    out: list[RadarMeasurement] = []
    if obj_idx.size == 0:
        return out
    noise_r = rng.normal(0.0, math.sqrt(cfg.sigma_r2), obj_idx.size)
    noise_th = rng.normal(0.0, math.sqrt(cfg.sigma_th2), obj_idx.size)
    for j in range(obj_idx.size):
        o, u = int(obj_idx[j]), int(uav_idx[j])
        d = float(dist[o, u])
        bearing = math.atan2(float(diff[o, u, 1]), float(diff[o, u, 0])) if d > 0.0 else 0.0
        out.append(RadarMeasurement(
            uav=u, obj=o,
            range_=max(0.0, d + float(noise_r[j])),
            bearing=wrap_angle(bearing + float(noise_th[j])),
        ))
    return out


def measurement_jacobians(est_xy, uav_xy):
    """Linearize the range and bearing maps about an estimated position.

    Returns (r_hat, range_jacobian(2,), bearing_jacobian(2,)); r_hat below the
    singular-linearization floor returns None instead.
    """
    dx = float(est_xy[0] - uav_xy[0])
    dy = float(est_xy[1] - uav_xy[1])
    r_hat = math.hypot(dx, dy)
    if r_hat < _MIN_RANGE:
        return None
    jr = np.array([dx / r_hat, dy / r_hat])
    jb = np.array([-dy / (r_hat * r_hat), dx / (r_hat * r_hat)])
    return r_hat, jr, jb


@dataclass
class Beliefs:
    means: np.ndarray  # (n_obj, 2)
    covs: np.ndarray   # (n_obj, 2, 2)

    def copy(self) -> "Beliefs":
        return Beliefs(self.means.copy(), self.covs.copy())

    def position_sq_errors(self, truth: np.ndarray) -> np.ndarray:
        d = self.means - truth
        return np.einsum("ij,ij->i", d, d)


def init_beliefs(world: WorldState, rng: np.random.Generator) -> Beliefs:
    cfg = world.config
    n = cfg.object_count
    means = world.objects + rng.normal(0.0, math.sqrt(cfg.init_var), (n, 2))
    covs = np.tile(cfg.init_var * np.eye(2), (n, 1, 1))
    return Beliefs(means, covs)


class StepInfo(NamedTuple):
    selected: tuple[int, ...]
    n_candidates: int
    f_value: float
    gain_evals: int


class _Candidates:
    """Scalar measurement channels linearized about the predicted estimates.

    Channels appear in measurement order, range before bearing, so candidate
    indices are deterministic and ties resolve toward lower indices.
    """

    __slots__ = ("obj", "h0", "h1", "sig2", "innov", "count")

    def __init__(self, beliefs: Beliefs, uavs: np.ndarray,
                 measurements: list[RadarMeasurement], cfg: ScenarioConfig):
        obj, h0, h1, sig2, innov = [], [], [], [], []
        for meas in measurements:
            est = beliefs.means[meas.obj]
            lin = measurement_jacobians(est, uavs[meas.uav])
            if lin is None:
                continue
            r_hat, jr, jb = lin
            bearing_hat = math.atan2(est[1] - uavs[meas.uav][1],
                                     est[0] - uavs[meas.uav][0])
            obj.append(meas.obj)
            h0.append(float(jr[0]))
            h1.append(float(jr[1]))
            sig2.append(cfg.sigma_r2)
            innov.append(meas.range_ - r_hat)
            obj.append(meas.obj)
            h0.append(float(jb[0]))
            h1.append(float(jb[1]))
            sig2.append(cfg.sigma_th2)
            innov.append(wrap_angle(meas.bearing - bearing_hat))
        self.obj = obj
        self.h0 = h0
        self.h1 = h1
        self.sig2 = sig2
        self.innov = innov
        self.count = len(obj)


def _select_channels(blocks: list[list[float]], cand: _Candidates, budget: int,
                     mode: str, epsilon: float | None,
                     rng: np.random.Generator | None) -> tuple[list[int], int]:
    """Budgeted channel selection on the block-diagonal Fisher state.

    `blocks` holds per-object [b00, b01, b11] entries of the information-form
    covariance and is updated in place as channels are chosen. Mirrors the
    dense greedy/randomized selectors; gains use 2x2 scalar arithmetic because
    each channel touches one object block.
    """
    obj, h0s, h1s, s2s = cand.obj, cand.h0, cand.h1, cand.sig2
    pool = list(range(cand.count))
    k_eff = min(budget, cand.count)
    chosen: list[int] = []
    evals = 0
    if mode == "randomized":
        if rng is None or epsilon is None:
            raise ParameterError("randomized selection needs epsilon and rng")
        if not (math.exp(-k_eff) <= epsilon < 1.0):
            raise ParameterError("epsilon outside [exp(-K), 1)")
        s_nominal = min(max(1, math.ceil(cand.count / k_eff * math.log(1.0 / epsilon))),
                        cand.count)
    elif mode != "greedy":
        raise ParameterError(f"unknown selection mode {mode!r}")

    for _ in range(k_eff):
        if mode == "greedy" or s_nominal >= len(pool):
            scan = pool  # ascending by construction
        else:
            s = s_nominal
            u = rng.random(s)
            last = len(pool) - 1
            for j in range(s):
                swap = j + int(u[j] * (len(pool) - j))
                if swap > last:
                    swap = last
                pool[j], pool[swap] = pool[swap], pool[j]
            scan = sorted(pool[:s])
        best = -1
        best_gain = -1.0
        for idx in scan:
            o = obj[idx]
            b00, b01, b11 = blocks[o]
            h0 = h0s[idx]
            h1 = h1s[idx]
            v0 = b00 * h0 + b01 * h1
            v1 = b01 * h0 + b11 * h1
            den = s2s[idx] + h0 * v0 + h1 * v1
            g = (v0 * v0 + v1 * v1) / den
            if g > best_gain:
                best_gain = g
                best = idx
        evals += len(scan)
        o = obj[best]
        b00, b01, b11 = blocks[o]
        h0 = h0s[best]
        h1 = h1s[best]
        v0 = b00 * h0 + b01 * h1
        v1 = b01 * h0 + b11 * h1
        den = s2s[best] + h0 * v0 + h1 * v1
        blocks[o] = [b00 - v0 * v0 / den, b01 - v0 * v1 / den, b11 - v1 * v1 / den]
        chosen.append(best)
        pool.remove(best)
    return chosen, evals


def _apply_selected(beliefs: Beliefs, cand: _Candidates, chosen: list[int],
                    blocks: list[list[float]]) -> None:
    """Information-form mean update per object from the chosen channels."""
    n = beliefs.means.shape[0]
    acc = np.zeros((n, 2))
    for idx in chosen:
        o = cand.obj[idx]
        w = cand.innov[idx] / cand.sig2[idx]
        acc[o, 0] += cand.h0[idx] * w
        acc[o, 1] += cand.h1[idx] * w
    for o in range(n):
        b00, b01, b11 = blocks[o]
        cov = np.array([[b00, b01], [b01, b11]])
        beliefs.covs[o] = cov
        beliefs.means[o] += cov @ acc[o]


def _apply_all_stacked(beliefs: Beliefs, cand: _Candidates) -> None:
    """Standard EKF update on the stacked system with every channel.

    The stacked covariance is block-diagonal and every channel touches one
    object, so the result equals per-object updates; the dense innovation
    covariance solve is the ordinary cost of ingesting all channels at once.
    """
    n = beliefs.means.shape[0]
    c = cand.count
    if c == 0:
        return
    dim = 2 * n
    p = np.zeros((dim, dim))
    for o in range(n):
        p[2 * o:2 * o + 2, 2 * o:2 * o + 2] = beliefs.covs[o]
    h = np.zeros((c, dim))
    rows = np.arange(c)
    cols = 2 * np.asarray(cand.obj)
    h[rows, cols] = cand.h0
    h[rows, cols + 1] = cand.h1
    r = np.asarray(cand.sig2)
    innov = np.asarray(cand.innov)

    pht = p @ h.T
    s_mat = h @ pht
    s_mat[np.diag_indices_from(s_mat)] += r
    gain = np.linalg.solve(s_mat, pht.T).T
    x = beliefs.means.reshape(-1) + gain @ innov
    p_new = p - gain @ pht.T
    p_new = 0.5 * (p_new + p_new.T)
    beliefs.means = x.reshape(n, 2)
    for o in range(n):
        beliefs.covs[o] = p_new[2 * o:2 * o + 2, 2 * o:2 * o + 2]


def ekf_step(beliefs: Beliefs, measurements: list[RadarMeasurement],
             uavs: np.ndarray, config: ScenarioConfig, selector: str,
             epsilon: float | None = None,
             rng: np.random.Generator | None = None) -> tuple[Beliefs, StepInfo]:
    """Predict, linearize every gathered channel, select under the budget,
    and update. selector is one of 'greedy', 'randomized', 'all'."""
    out = beliefs.copy()
    out.covs += config.q_var * np.eye(2)

    cand = _Candidates(out, uavs, measurements, config)
    trace_pred = float(np.trace(out.covs.sum(axis=0)))
    if selector == "all":
        _apply_all_stacked(out, cand)
        f_val = trace_pred - float(np.trace(out.covs.sum(axis=0)))
        return out, StepInfo((), cand.count, f_val, 0)

    blocks = [[float(out.covs[o, 0, 0]), float(out.covs[o, 0, 1]),
               float(out.covs[o, 1, 1])] for o in range(out.means.shape[0])]
    chosen, evals = _select_channels(blocks, cand, config.budget, selector,
                                     epsilon, rng)
    _apply_selected(out, cand, chosen, blocks)
    f_val = trace_pred - float(np.trace(out.covs.sum(axis=0)))
    return out, StepInfo(tuple(chosen), cand.count, f_val, evals)


def calibrate_detection_radius(target_channels: float = 600.0, steps: int = 100,
                               seed: int = 0, tol: float = 5.0) -> float:
    """Bisect the detection radius until the mean per-step channel count hits
    the target. Used once to fix ScenarioConfig.detection_radius; kept as the
    provenance of that constant."""
    lo, hi = 0.5, float(math.hypot(5.0, 10.0))

    def mean_channels(radius: float) -> float:
        cfg = ScenarioConfig(detection_radius=radius)
        rng = np.random.default_rng(seed)
        world = init_world(cfg, rng)
        total = 0
        for _ in range(steps):
            world = step_world(world, rng)
            total += 2 * int(np.count_nonzero(
                np.hypot(*(world.objects[:, None, :] - world.uav_positions()[None, :, :])
                         .transpose(2, 0, 1)) <= radius))
        return total / steps

    for _ in range(60):
        mid = 0.5 * (lo + hi)
        got = mean_channels(mid)
        if abs(got - target_channels) <= tol:
            return mid
        if got < target_channels:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def run_uav_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Compare greedy, randomized (each epsilon), and all-measurements EKF
    tracking on shared worlds. Records per-step tracking MSE (mean squared
    position error over objects, filtered estimates) and combined
    select+filter seconds per step in the select_time_s column."""
    scenario = ScenarioConfig()
    policies: list[tuple[str, str, float | None]] = [("greedy", "greedy", None)]
    for eps in cfg.eps_list:
        policies.append((f"randomized({eps:g})", "randomized", eps))
    policies.append(("all", "all", None))

    records: list[dict] = []
    trajectories: list[dict] = []
    sq_err: dict[str, list[float]] = {name: [] for name, _, _ in policies}
    pred_sq_err: dict[str, list[float]] = {name: [] for name, _, _ in policies}
    total_time: dict[str, float] = {name: 0.0 for name, _, _ in policies}
    channel_counts: list[int] = []

    for trial in range(cfg.trials):
        world_rng = substream(cfg.master_seed, "uav-world", trial)
        world = init_world(scenario, world_rng)
        init_rng = substream(cfg.master_seed, "uav-init", trial)
        base = init_beliefs(world, init_rng)
        beliefs = {name: base.copy() for name, _, _ in policies}
        for step in range(1, cfg.horizon + 1):
            world = step_world(world, world_rng)
            measurements = sense(world, world_rng)
            channel_counts.append(2 * len(measurements))
            uavs = world.uav_positions()
            for name, mode, eps in policies:
                pred = beliefs[name].copy()
                pred.covs += scenario.q_var * np.eye(2)
                pred_sq_err[name].extend(pred.position_sq_errors(world.objects).tolist())
                sel_rng = (substream(cfg.master_seed, "uav-sel", name, trial, step)
                           if mode == "randomized" else None)
                t0 = time.perf_counter()
                updated, info = ekf_step(beliefs[name], measurements, uavs,
                                         scenario, mode, eps, sel_rng)
                elapsed = time.perf_counter() - t0
                beliefs[name] = updated
                errs = updated.position_sq_errors(world.objects)
                sq_err[name].extend(errs.tolist())
                total_time[name] += elapsed
                records.append({
                    "experiment": "uav", "policy": name, "eps": eps,
                    "gamma": None, "trial": trial, "step": step,
                    "K": scenario.budget, "mse": float(errs.mean()),
                    "f_value": info.f_value, "gain_evals": info.gain_evals,
                    "select_time_s": elapsed, "err2": float(errs.sum()),
                })
                if trial == 0:
                    for o in range(scenario.object_count):
                        trajectories.append({
                            "policy": name, "step": step, "object_id": o,
                            "true_x": float(world.objects[o, 0]),
                            "true_y": float(world.objects[o, 1]),
                            "est_x": float(updated.means[o, 0]),
                            "est_y": float(updated.means[o, 1]),
                        })

    summary: dict = {
        "experiment": "uav",
        "trials": cfg.trials,
        "horizon": cfg.horizon,
        "budget": scenario.budget,
        "mean_channels_per_step": float(np.mean(channel_counts)),
        "detection_radius": scenario.detection_radius,
    }
    for name, _, _ in policies:
        summary[name] = {
            "tracking_mse": float(np.mean(sq_err[name])),
            "tracking_mse_pred": float(np.mean(pred_sq_err[name])),
            "combined_time_s": total_time[name],
        }
    violations: list[str] = []
    perf_violations: list[str] = []
    all_mse = summary["all"]["tracking_mse"]
    for name, mode, _ in policies:
        if mode != "randomized":
            continue
        rel = abs(summary[name]["tracking_mse"] - all_mse) / all_mse
        summary[name]["mse_gap_vs_all"] = rel
        if rel > 0.15:
            violations.append(f"{name}: tracking MSE differs from all-measurements by {rel:.1%}")
        if not (total_time[name] < total_time["all"] < total_time["greedy"]):
            perf_violations.append(
                f"combined runtime ordering violated: {name}={total_time[name]:.3f}s "
                f"all={total_time['all']:.3f}s greedy={total_time['greedy']:.3f}s"
            )
    summary["violations"] = violations
    summary["perf_violations"] = perf_violations
    tables = {
        "trajectories": (
            ("policy", "step", "object_id", "true_x", "true_y", "est_x", "est_y"),
            trajectories,
        )
    }
    return ExperimentReport(records, summary, extra_tables=tables)
