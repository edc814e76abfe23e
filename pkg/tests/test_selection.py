"""Selector behavior: sample-size rule, tie-breaks, evaluation accounting,
the tiny-epsilon/greedy equivalence, and the sampling-hit diagnostics."""

import itertools
import math

import numpy as np
import pytest

from conftest import direct_f, random_problem

from ksched.model import ParameterError
from ksched.selection import (
    AllSensorsPolicy,
    EnumerationCapError,
    ExhaustivePolicy,
    GreedyPolicy,
    RandomPolicy,
    RandomizedGreedyPolicy,
    SamplingConfig,
    beta_exponent,
    exact_hit_probability,
    exhaustive_select,
    greedy_select,
    hit_probability_lower_bound,
    make_policy,
    random_select,
    randomized_greedy_select,
    sample_size,
    sampling_hit_rate,
)


# ---------------------------------------------------------------------------
# sample-size rule and exponent


def test_sample_size_values():
    assert sample_size(400, 55, 0.001) == 51
    assert sample_size(400, 60, 0.1) == 16
    assert sample_size(400, 60, 0.01) == 31
    assert sample_size(400, 60, 0.001) == 47
    assert sample_size(200, 25, 0.1) == 19
    # clamped into [1, n]
    assert sample_size(10, 10, 0.99) == 1
    assert sample_size(10, 1, 1e-9) == 10
    with pytest.raises(ParameterError):
        sample_size(10, 2, 1.0)


def test_beta_exponent_values():
    assert beta_exponent(100, 7) == pytest.approx(1.0296237, abs=1e-7)
    assert beta_exponent(5, 5) == 1.0  # whole-pool sample
    # small s: the negative branch clamps at zero
    assert beta_exponent(100, 1) == 1.0
    with pytest.raises(ParameterError):
        beta_exponent(5, 6)


def test_sampling_config_validation():
    with pytest.raises(ParameterError):
        SamplingConfig(0.0)
    with pytest.raises(ParameterError):
        SamplingConfig(1.0)
    cfg = SamplingConfig(0.001)
    cfg.validate_for_budget(10)
    with pytest.raises(ParameterError):
        SamplingConfig(1e-6).validate_for_budget(10)  # below e^-10
    assert cfg.sample_size(400, 55) == 51


# ---------------------------------------------------------------------------
# greedy


def test_greedy_matches_naive_argmax_chain(rng):
    for _ in range(10):
        p, rows, r = random_problem(rng, 4, 9)
        res = greedy_select(p, rows, r, 4)
        chosen = []
        for _ in range(4):
            gains = {
                j: direct_f(p, rows, r, chosen + [j]) - direct_f(p, rows, r, chosen)
                for j in range(9) if j not in chosen
            }
            best = max(gains, key=lambda j: (gains[j], -j))
            chosen.append(best)
        assert list(res.selected) == chosen


def test_greedy_eval_count_identity(rng):
    p, rows, r = random_problem(rng, 3, 10)
    for k in (1, 3, 10):
        res = greedy_select(p, rows, r, k)
        assert res.gain_evals == 10 * k - k * (k - 1) // 2


def test_greedy_ties_break_to_lowest_index(rng):
    p = np.eye(3)
    rows = np.tile(np.array([1.0, 0.0, 0.0]), (5, 1))  # identical rows
    r = np.ones(5)
    res = greedy_select(p, rows, r, 3)
    assert res.selected == (0, 1, 2)


def test_greedy_result_consistency(rng):
    p, rows, r = random_problem(rng, 4, 12)
    res = greedy_select(p, rows, r, 5)
    assert len(res.selected) == 5
    assert res.f_final == pytest.approx(direct_f(p, rows, r, res.selected), rel=1e-9)
    assert res.f_final + res.mse == pytest.approx(np.trace(p), rel=1e-12)
    with pytest.raises(ParameterError):
        greedy_select(p, rows, r, 13)


# ---------------------------------------------------------------------------
# randomized


def test_tiny_epsilon_reduces_to_greedy(rng):
    for trial in range(10):
        p, rows, r = random_problem(rng, 4, 15)
        k = 4
        g = greedy_select(p, rows, r, k)
        res = randomized_greedy_select(
            p, rows, r, k, SamplingConfig(math.exp(-k)), np.random.default_rng(trial)
        )
        assert res.selected == g.selected
        assert res.f_final == g.f_final  # bit-identical arithmetic path
        assert res.sample_sizes == (15, 14, 13, 12)


def test_randomized_eval_count_identity(rng):
    p, rows, r = random_problem(rng, 3, 20)
    for eps, k in ((0.3, 5), (0.05, 8)):
        s = sample_size(20, k, eps)
        res = randomized_greedy_select(
            p, rows, r, k, SamplingConfig(eps), np.random.default_rng(0)
        )
        expected = sum(min(s, 20 - i) for i in range(k))
        assert res.gain_evals == expected
        assert res.sample_sizes == tuple(min(s, 20 - i) for i in range(k))


def test_randomized_is_deterministic_given_rng(rng):
    p, rows, r = random_problem(rng, 4, 18)
    a = randomized_greedy_select(p, rows, r, 5, SamplingConfig(0.3),
                                 np.random.default_rng(7))
    b = randomized_greedy_select(p, rows, r, 5, SamplingConfig(0.3),
                                 np.random.default_rng(7))
    assert a.selected == b.selected and a.f_final == b.f_final


def test_randomized_selects_distinct_valid_indices(rng):
    p, rows, r = random_problem(rng, 3, 12)
    res = randomized_greedy_select(p, rows, r, 6, SamplingConfig(0.5),
                                   np.random.default_rng(3))
    assert len(set(res.selected)) == 6
    assert all(0 <= j < 12 for j in res.selected)


def test_gain_ratio_tracing(rng):
    p, rows, r = random_problem(rng, 4, 14)
    k = 5
    res = randomized_greedy_select(
        p, rows, r, k, SamplingConfig(0.4), np.random.default_rng(1),
        trace_gain_ratios=True,
    )
    assert res.gain_ratio_trace is not None and len(res.gain_ratio_trace) == k
    assert all(0.0 < eta <= 1.0 + 1e-12 for eta in res.gain_ratio_trace)
    s = sample_size(14, k, 0.4)
    # tracing adds a full-pool scan per iteration
    assert res.gain_evals == sum(min(s, 14 - i) + (14 - i) for i in range(k))
    # whole-pool sampling makes every ratio exactly one
    full = randomized_greedy_select(
        p, rows, r, k, SamplingConfig(math.exp(-k)), np.random.default_rng(1),
        trace_gain_ratios=True,
    )
    assert full.gain_ratio_trace == (1.0,) * k


# ---------------------------------------------------------------------------
# exhaustive and random baselines


def test_exhaustive_matches_brute_force(rng):
    for _ in range(5):
        p, rows, r = random_problem(rng, 3, 8)
        res = exhaustive_select(p, rows, r, 3)
        best = min(
            itertools.combinations(range(8), 3),
            key=lambda s: direct_f(p, rows, r, ()) - direct_f(p, rows, r, s),
        )
        # same optimum and lexicographically-first tie handling
        assert res.selected == best
        assert res.gain_evals == math.comb(8, 3)


def test_exhaustive_never_below_greedy(rng):
    for _ in range(5):
        p, rows, r = random_problem(rng, 4, 9)
        g = greedy_select(p, rows, r, 3)
        o = exhaustive_select(p, rows, r, 3)
        assert o.f_final >= g.f_final - 1e-12


def test_enumeration_cap(rng):
    p, rows, r = random_problem(rng, 3, 20)
    with pytest.raises(EnumerationCapError):
        exhaustive_select(p, rows, r, 10, max_combinations=1000)


def test_random_select_baseline(rng):
    p, rows, r = random_problem(rng, 3, 10)
    res = random_select(p, rows, r, 4, np.random.default_rng(5))
    again = random_select(p, rows, r, 4, np.random.default_rng(5))
    assert res.selected == again.selected
    assert len(set(res.selected)) == 4
    assert res.gain_evals == 0
    assert res.f_final == pytest.approx(direct_f(p, rows, r, res.selected), rel=1e-9)


# ---------------------------------------------------------------------------
# sampling-hit diagnostics


def test_exact_hit_probability_hand_value():
    # pool 10, 2 targets, sample 3: miss = (8/10)(7/9)(6/8)
    assert exact_hit_probability(10, 2, 3) == pytest.approx(1 - 336 / 720, abs=1e-15)
    assert exact_hit_probability(10, 0, 3) == 0.0
    assert exact_hit_probability(10, 3, 8) == 1.0  # sample too big to miss
    with pytest.raises(ParameterError):
        exact_hit_probability(10, 11, 3)


def test_hit_rate_matches_exact_value(rng):
    n, s = 12, 4
    optimal = (0, 5, 7)
    selected = (5,)  # one optimal sensor already chosen, two targets left
    trials = 40000
    rate = sampling_hit_rate(n, s, optimal, selected, trials, np.random.default_rng(2))
    exact = exact_hit_probability(11, 2, s)
    sigma = math.sqrt(exact * (1 - exact) / trials)
    assert abs(rate - exact) <= 4 * sigma


def test_hit_rate_dominates_lower_bound(rng):
    n, k, eps = 15, 4, 0.3
    s = sample_size(n, k, eps)
    bound = hit_probability_lower_bound(n, k, s, missing=2, epsilon=eps)
    rate = sampling_hit_rate(n, s, (3, 9), (), 20000, np.random.default_rng(4))
    assert rate >= bound
    assert bound > 0.0


def test_sampling_hit_rate_validation(rng):
    with pytest.raises(ParameterError):
        sampling_hit_rate(10, 11, (0,), (), 100, np.random.default_rng(0))
    with pytest.raises(ParameterError):
        sampling_hit_rate(10, 2, (0,), (), 0, np.random.default_rng(0))


# ---------------------------------------------------------------------------
# policy objects


def test_policy_names_and_rng_flags():
    assert GreedyPolicy().name == "greedy"
    assert not GreedyPolicy().uses_rng
    rp = RandomizedGreedyPolicy(epsilon=0.001)
    assert rp.name == "randomized(0.001)"
    assert rp.uses_rng
    assert RandomPolicy().uses_rng
    assert ExhaustivePolicy().name == "exhaustive"
    assert AllSensorsPolicy().name == "all"


def test_make_policy_round_trip():
    assert isinstance(make_policy("greedy"), GreedyPolicy)
    assert isinstance(make_policy("random"), RandomPolicy)
    assert isinstance(make_policy("all"), AllSensorsPolicy)
    assert isinstance(make_policy("exhaustive"), ExhaustivePolicy)
    rp = make_policy("randomized:0.01")
    assert isinstance(rp, RandomizedGreedyPolicy) and rp.epsilon == 0.01
    with pytest.raises(ParameterError):
        make_policy("simulated-annealing")


def test_policies_select_consistently(rng):
    p, rows, r = random_problem(rng, 3, 9)
    g = GreedyPolicy().select(p, rows, r, 3)
    assert g.selected == greedy_select(p, rows, r, 3).selected
    rr = RandomizedGreedyPolicy(epsilon=0.5).select(p, rows, r, 3,
                                                    np.random.default_rng(1))
    assert len(rr.selected) == 3
    with pytest.raises(ParameterError):
        RandomizedGreedyPolicy(epsilon=0.5).select(p, rows, r, 3)
    a = AllSensorsPolicy().select(p, rows, r, 3)
    assert a.selected == tuple(range(9))
