"""Sensor-selection policies.

greedy_select scans every unselected candidate each iteration; the randomized
selector scans a uniform without-replacement sample of size
s = ceil((n/K) ln(1/eps)) instead, which preserves the expectation guarantee
while cutting the evaluation count by roughly K/ln(1/eps). Ties always break
toward the lowest sensor index, so eps = e^-K reproduces greedy exactly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .model import ParameterError
from .objective import FisherState, _gain, score_selection


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[int, ...]
    f_final: float
    mse: float
    gain_evals: int
    wall_time: float
    sample_sizes: tuple[int, ...] | None = None
    gain_ratio_trace: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SamplingConfig:
    """Sample-size rule for the randomized selector.

    epsilon must lie in [e^-K, 1); the sample size is
    s = ceil((n/K) ln(1/epsilon)), clamped per iteration to the remaining pool.
    """

    epsilon: float

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ParameterError(f"epsilon must be in (0, 1), got {self.epsilon}")

    def validate_for_budget(self, K: int) -> None:
        lo = math.exp(-K)
        if self.epsilon < lo:
            raise ParameterError(
                f"epsilon {self.epsilon} below e^-K = {lo:.3e} for K={K}"
            )

    def sample_size(self, n: int, K: int) -> int:
        return sample_size(n, K, self.epsilon)


def sample_size(n: int, K: int, epsilon: float) -> int:
    """Nominal per-iteration sample size s = ceil((n/K) ln(1/epsilon))."""
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must be in (0, 1), got {epsilon}")
    s = math.ceil((n / K) * math.log(1.0 / epsilon))
    return max(1, min(s, n))


def beta_exponent(n: int, s: int) -> float:
    """Sampling exponent beta = 1 + max{0, s/2n - 1/(2(n-s))}; 1 when s = n
    (the sample is the whole pool, hit probability exactly 1)."""
    if not 1 <= s <= n:
        raise ParameterError(f"need 1 <= s <= n, got s={s}, n={n}")
    if s == n:
        return 1.0
    return 1.0 + max(0.0, s / (2.0 * n) - 1.0 / (2.0 * (n - s)))


def _best_candidate(state: FisherState, candidates) -> tuple[int, float]:
    """Argmax marginal gain over `candidates`, scanned in the given order.

    Callers pass candidates in ascending index order; the strict > comparison
    then implements the lowest-index tie-break.
    """
    f_inv = state.f_inv
    rows = state.rows
    r_diag = state.r_diag
    best_j = -1
    best_g = -1.0
    for j in candidates:
        g = _gain(f_inv, rows[j], r_diag[j])
        if g > best_g:
            best_g = g
            best_j = j
    return int(best_j), best_g


def greedy_select(p_pred, h_k, r_diag, K) -> SelectionResult:
    """Classical greedy: K passes over all unselected sensors."""
    state = FisherState(p_pred, h_k, r_diag)
    n = state.n
    if K > n:
        raise ParameterError(f"budget K={K} exceeds n={n}")
    remaining = list(range(n))
    evals = 0
    t0 = time.perf_counter()
    for _ in range(K):
        j, _ = _best_candidate(state, remaining)
        state.add(j)
        remaining.remove(j)
        evals += len(remaining) + 1
    wall = time.perf_counter() - t0
    return SelectionResult(
        selected=state.selected,
        f_final=state.f_value(),
        mse=state.mse(),
        gain_evals=evals,
        wall_time=wall,
    )


def randomized_greedy_select(
    p_pred,
    h_k,
    r_diag,
    K,
    cfg: SamplingConfig,
    rng: np.random.Generator,
    trace_gain_ratios: bool = False,
) -> SelectionResult:
    """Best-in-sample greedy with uniform without-replacement samples.

    Sampling is a partial Fisher-Yates shuffle of the unselected-index array.
    With trace_gain_ratios on, every iteration additionally runs the full
    greedy scan to record eta = gain(chosen)/gain(greedy argmax), roughly
    doubling the evaluation cost; timings with tracing on are not comparable.
    """
    state = FisherState(p_pred, h_k, r_diag)
    n = state.n
    if K > n:
        raise ParameterError(f"budget K={K} exceeds n={n}")
    cfg.validate_for_budget(K)
    s_nominal = cfg.sample_size(n, K)

    pool = np.arange(n, dtype=np.int64)
    pool_len = n
    evals = 0
    sizes: list[int] = []
    ratios: list[float] = []
    t0 = time.perf_counter()
    for _ in range(K):
        s = min(s_nominal, pool_len)
        for t in range(s):
            u = t + int(rng.integers(pool_len - t))
            pool[t], pool[u] = pool[u], pool[t]
        sample = np.sort(pool[:s])
        j, g = _best_candidate(state, sample)
        evals += s
        sizes.append(s)
        if trace_gain_ratios:
            _, g_full = _best_candidate(state, np.sort(pool[:pool_len]))
            evals += pool_len
            ratios.append(g / g_full if g_full > 0.0 else 1.0)
        state.add(j)
        # drop j from the pool; it sits somewhere in the first s slots
        pos = int(np.nonzero(pool[:s] == j)[0][0])
        pool[pos] = pool[pool_len - 1]
        pool[pool_len - 1] = j
        pool_len -= 1
    wall = time.perf_counter() - t0
    return SelectionResult(
        selected=state.selected,
        f_final=state.f_value(),
        mse=state.mse(),
        gain_evals=evals,
        wall_time=wall,
        sample_sizes=tuple(sizes),
        gain_ratio_trace=tuple(ratios) if trace_gain_ratios else None,
    )


class EnumerationCapError(ParameterError):
    """Exhaustive search refused: too many subsets."""


def exhaustive_select(p_pred, h_k, r_diag, K, max_combinations: int = 2_000_000):
    """Exact optimum by full enumeration; ties broken lexicographically."""
    import itertools

    base = FisherState(p_pred, h_k, r_diag)
    n = base.n
    if K > n:
        raise ParameterError(f"budget K={K} exceeds n={n}")
    count = math.comb(n, K)
    if count > max_combinations:
        raise EnumerationCapError(
            f"C({n},{K}) = {count} subsets exceeds cap {max_combinations}"
        )
    best_subset: tuple[int, ...] | None = None
    best_mse = math.inf
    t0 = time.perf_counter()
    for subset in itertools.combinations(range(n), K):
        st = base.clone()
        for j in subset:
            st.add(j)
        mse = st.mse()
        if mse < best_mse:
            best_mse = mse
            best_subset = subset
    wall = time.perf_counter() - t0
    final = base.clone()
    for j in best_subset:
        final.add(j)
    return SelectionResult(
        selected=final.selected,
        f_final=final.f_value(),
        mse=final.mse(),
        gain_evals=count,
        wall_time=wall,
    )


def random_select(p_pred, h_k, r_diag, K, rng: np.random.Generator) -> SelectionResult:
    """Uniform K-subset baseline; f and MSE evaluated after the fact."""
    state = FisherState(p_pred, h_k, r_diag)
    n = state.n
    if K > n:
        raise ParameterError(f"budget K={K} exceeds n={n}")
    pool = np.arange(n, dtype=np.int64)
    t0 = time.perf_counter()
    for t in range(K):
        u = t + int(rng.integers(n - t))
        pool[t], pool[u] = pool[u], pool[t]
    for j in pool[:K]:
        state.add(int(j))
    wall = time.perf_counter() - t0
    return SelectionResult(
        selected=state.selected,
        f_final=state.f_value(),
        mse=state.mse(),
        gain_evals=0,
        wall_time=wall,
    )


# ---------------------------------------------------------------------------
# sampling-hit diagnostics


def sampling_hit_rate(
    n: int,
    s: int,
    optimal_set,
    selected_so_far,
    trials: int,
    rng: np.random.Generator,
) -> float:
    """Monte-Carlo estimate of Pr{sample of size s hits optimal \\ selected}.

    Samples are drawn exactly as the selector draws them: a partial
    Fisher-Yates pass over the unselected-index pool (vectorized across
    trials). Used to check the lower bound of hit_probability_lower_bound and
    the exact hypergeometric value.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    selected = set(int(j) for j in selected_so_far)
    pool = np.array([j for j in range(n) if j not in selected], dtype=np.int64)
    npool = len(pool)
    if not 1 <= s <= npool:
        raise ParameterError(f"need 1 <= s <= pool size {npool}, got {s}")
    target = np.zeros(n, dtype=bool)
    for j in optimal_set:
        if int(j) not in selected:
            target[int(j)] = True

    pools = np.tile(pool, (trials, 1))
    cols = np.arange(trials)
    for t in range(s):
        u = t + rng.integers(0, npool - t, size=trials)
        front = pools[cols, t].copy()
        pools[cols, t] = pools[cols, u]
        pools[cols, u] = front
    hits = target[pools[:, :s]].any(axis=1)
    return float(hits.mean())


def exact_hit_probability(pool_size: int, targets: int, s: int) -> float:
    """1 - C(pool-targets, s)/C(pool, s): chance a without-replacement sample
    of size s contains at least one of `targets` marked elements."""
    if not 0 <= targets <= pool_size or not 1 <= s <= pool_size:
        raise ParameterError("invalid hypergeometric parameters")
    if targets == 0:
        return 0.0
    if s > pool_size - targets:
        return 1.0
    miss = 1.0
    for t in range(s):
        miss *= (pool_size - targets - t) / (pool_size - t)
    return 1.0 - miss


def hit_probability_lower_bound(n: int, K: int, s: int, missing: int, epsilon: float) -> float:
    """((1 - eps^beta)/K) * missing, the guaranteed floor on the hit rate when
    `missing` optimal sensors are still unselected."""
    beta = beta_exponent(n, s)
    return (1.0 - epsilon**beta) / K * missing


# ---------------------------------------------------------------------------
# policy objects for the filtering/experiment layers


class Policy:
    """A named selection strategy invoked once per time step."""

    name: str = "base"
    uses_rng: bool = False

    def select(self, p_pred, h_k, r_diag, K, rng=None) -> SelectionResult:
        raise NotImplementedError


@dataclass(frozen=True)
class GreedyPolicy(Policy):
    name: str = field(default="greedy", init=False)

    def select(self, p_pred, h_k, r_diag, K, rng=None) -> SelectionResult:
        return greedy_select(p_pred, h_k, r_diag, K)


@dataclass(frozen=True)
class RandomizedGreedyPolicy(Policy):
    epsilon: float
    trace_gain_ratios: bool = False
    uses_rng: bool = field(default=True, init=False)

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"randomized({self.epsilon:g})"

    def select(self, p_pred, h_k, r_diag, K, rng=None) -> SelectionResult:
        if rng is None:
            raise ParameterError("randomized policy needs an rng")
        return randomized_greedy_select(
            p_pred, h_k, r_diag, K, SamplingConfig(self.epsilon), rng,
            trace_gain_ratios=self.trace_gain_ratios,
        )


@dataclass(frozen=True)
class RandomPolicy(Policy):
    name: str = field(default="random", init=False)
    uses_rng: bool = field(default=True, init=False)

    def select(self, p_pred, h_k, r_diag, K, rng=None) -> SelectionResult:
        if rng is None:
            raise ParameterError("random policy needs an rng")
        return random_select(p_pred, h_k, r_diag, K, rng)


@dataclass(frozen=True)
class ExhaustivePolicy(Policy):
    max_combinations: int = 2_000_000
    name: str = field(default="exhaustive", init=False)

    def select(self, p_pred, h_k, r_diag, K, rng=None) -> SelectionResult:
        return exhaustive_select(p_pred, h_k, r_diag, K, self.max_combinations)


@dataclass(frozen=True)
class AllSensorsPolicy(Policy):
    """Selects every sensor; the budget is not binding."""

    name: str = field(default="all", init=False)

    def select(self, p_pred, h_k, r_diag, K, rng=None) -> SelectionResult:
        n = np.asarray(h_k).shape[0]
        t0 = time.perf_counter()
        sel = tuple(range(n))
        f, mse = score_selection(p_pred, h_k, r_diag, sel)
        wall = time.perf_counter() - t0
        return SelectionResult(sel, f, mse, gain_evals=0, wall_time=wall)


def make_policy(spec: str) -> Policy:
    """Parse a policy spec string: greedy | randomized:EPS | random | all |
    exhaustive. Used by the CLI --policies flag."""
    spec = spec.strip()
    if spec == "greedy":
        return GreedyPolicy()
    if spec == "random":
        return RandomPolicy()
    if spec == "all":
        return AllSensorsPolicy()
    if spec == "exhaustive":
        return ExhaustivePolicy()
    if spec.startswith("randomized:"):
        return RandomizedGreedyPolicy(epsilon=float(spec.split(":", 1)[1]))
    raise ParameterError(f"unknown policy spec {spec!r}")
