import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risingbandits._base import INF, argmax_ordered
from risingbandits.env import make_synthetic_suite
from risingbandits.payoff import ConfigurationError, PayoffCurve
from risingbandits.rising import (
    RisingConfig, RisingMode, RisingPolicy, WindowedArmStats, exploration_bonus, heuristic_estimate,
    naive_windowed_estimate, red_det_index, rless_det_index, select_arm, update, window_size,
    windowed_estimate,
)

eps_values = st.sampled_from([1 / 8, 1 / 4, 3 / 8, 0.1, 0.49])


def feed(stats, rewards, times=None):
    times = times if times is not None else range(1, len(rewards) + 1)
    for r, t in zip(rewards, times):
        stats.update(r, t)
    return stats


# -- window and deterministic indices ---------------------------------------

def test_window_size_examples():
    assert window_size(0, 0.25) == 0
    assert window_size(9, 0.25) == 2
    assert window_size(8, 0.25) == 2
    assert 0 <= window_size(9, 0.25) - window_size(8, 0.25) <= 1


@given(n=st.integers(0, 10**6), eps=st.floats(1e-3, 0.499))
def test_window_grows_by_at_most_one(n, eps):
    d = window_size(n + 1, eps) - window_size(n, eps)
    assert d in (0, 1)
    assert window_size(n, eps) <= n // 2


def test_red_det_index_examples():
    assert red_det_index(0.3, 0.1, 1, 5) == INF
    assert red_det_index(0.6, 0.1, 2, 5) == pytest.approx(0.9)
    assert red_det_index(0.4, 0.0, 7, 1000) == 0.4


def test_rless_det_index_examples():
    assert rless_det_index(0.5, 0.2, 3, 1, 6) == pytest.approx(0.95)
    assert rless_det_index(0.4, 0.4, 9, 2, 50) == 0.4
    with pytest.raises(ValueError):
        rless_det_index(0.5, 0.2, 3, 3, 6)


def test_deterministic_policy_uses_infinite_index_until_two_pulls():
    pol = RisingPolicy(2, RisingConfig(mode="restless", deterministic=True))
    pol.update(0, 0.3, 1)
    assert pol.index(0, 2) == INF


# -- bonus ------------------------------------------------------------------

def test_bonus_spot_value():
    assert exploration_bonus(0.1, 10, 4, 2, 0.01) == pytest.approx(0.1 * 7 * math.sqrt(10 * math.log(100) / 8))
    assert exploration_bonus(0.1, 10, 4, 2, 0.01) == pytest.approx(1.6795, abs=1e-3)


def test_bonus_edge_cases():
    assert exploration_bonus(0.0, 50, 10, 2, 0.01) == 0.0
    assert exploration_bonus(0.1, 50, 10, 0, 0.01) == INF


@settings(max_examples=200, deadline=None)
@given(t=st.integers(3, 10**5), n_frac=st.floats(0.0, 0.99), h=st.integers(1, 500),
       d1=st.floats(1e-9, 0.9), d2=st.floats(1e-9, 0.9))
def test_bonus_monotone(t, n_frac, h, d1, d2):
    n = min(int(n_frac * t), t - 1)
    lo, hi = sorted((d1, d2))
    if lo < hi:
        assert exploration_bonus(0.1, t, n, h, lo) > exploration_bonus(0.1, t, n, h, hi)
    assert exploration_bonus(0.1, t, n, h + 1, 0.01) < exploration_bonus(0.1, t, n, h, 0.01)
    assert exploration_bonus(0.1, t + 1, n, h, 0.01) > exploration_bonus(0.1, t, n, h, 0.01)


def test_argmax_invariant_under_common_shift():
    rng = np.random.default_rng(0)
    order = list(rng.permutation(6))
    for _ in range(200):
        vals = list(rng.normal(size=6))
        c = float(rng.normal() * 10)
        assert argmax_ordered(vals, order) == argmax_ordered([v + c for v in vals], order)


# -- estimators -------------------------------------------------------------

def test_windowed_estimate_examples():
    s = feed(WindowedArmStats(0.25), [0.1, 0.2, 0.3])
    assert windowed_estimate(s, 5) == INF
    # h=2 at n=4 needs epsilon = 1/2, outside the schedule, so use the direct form
    assert naive_windowed_estimate([0.1, 0.2, 0.3, 0.4], 2, 6) == pytest.approx(0.6)


def test_windowed_estimate_worked_example_through_accumulators():
    s = feed(WindowedArmStats(0.45), [0.1, 0.2, 0.3, 0.4, 0.5])
    assert s.h == 2
    assert s.estimate(7) == pytest.approx(naive_windowed_estimate([0.1, 0.2, 0.3, 0.4, 0.5], 2, 7))


def test_constant_rewards_estimate_constant():
    s = feed(WindowedArmStats(0.25), [0.37] * 40)
    for t in (41, 100, 10**5):
        assert s.estimate(t) == pytest.approx(0.37, abs=1e-12)


def test_heuristic_examples():
    assert WindowedArmStats(0.25, track_heuristic=True).heuristic(3) == INF
    # h=2 at n=4 is outside the schedule; evaluate the O(h) form on a hand-built history
    s = WindowedArmStats(0.25)
    s.rewards, s.pull_times, s.n, s.h = [0.1, 0.2, 0.3, 0.4], [1, 3, 5, 7], 4, 2
    assert heuristic_estimate(s, 9) == pytest.approx(0.5)


@settings(max_examples=60, deadline=None)
@given(rewards=st.lists(st.floats(-2, 2), min_size=2, max_size=120), eps=eps_values,
       t_extra=st.integers(1, 500))
def test_heuristic_equals_windowed_for_consecutive_pulls(rewards, eps, t_extra):
    s = feed(WindowedArmStats(eps, track_heuristic=True), rewards)
    t = len(rewards) + t_extra
    if s.valid():
        assert s.heuristic(t) == pytest.approx(s.estimate(t), rel=1e-9, abs=1e-9)
        assert heuristic_estimate(s, t) == pytest.approx(s.heuristic(t), rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(rewards=st.lists(st.floats(-2, 2), min_size=2, max_size=150), eps=eps_values,
       gaps=st.lists(st.integers(1, 20), min_size=150, max_size=150))
def test_tracked_heuristic_matches_o_h_form(rewards, eps, gaps):
    times = np.cumsum(gaps[: len(rewards)]).tolist()
    s = WindowedArmStats(eps, track_heuristic=True)
    for r, t in zip(rewards, times):
        s.update(r, t)
        if s.valid():
            assert s.heuristic(t + 3) == pytest.approx(heuristic_estimate(s, t + 3), rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(rewards=st.lists(st.floats(-3, 3), min_size=1, max_size=200), eps=eps_values)
def test_accumulators_equal_naive_sums_after_every_update(rewards, eps):
    s = WindowedArmStats(eps)
    for i, r in enumerate(rewards, start=1):
        s.update(r, i)
        assert s.h == window_size(s.n, eps)
        for got, want in zip((s.acc_a, s.acc_b, s.acc_c, s.acc_d), s.naive_sums()):
            assert got == pytest.approx(want, rel=1e-9, abs=1e-9)
        if s.valid():
            t = i + 7
            h = s.h
            lhs = h * s.acc_a + t * (s.acc_a - s.acc_b) - (s.acc_c - s.acc_d)
            assert h * h * s.estimate(t) == pytest.approx(lhs, rel=1e-9, abs=1e-9)
            assert s.estimate(t) == pytest.approx(naive_windowed_estimate(s.rewards, h, t), rel=1e-9, abs=1e-9)


def test_first_update_leaves_estimate_infinite():
    s = WindowedArmStats(0.25)
    s.update(0.4, 1)
    assert (s.n, s.h) == (1, 0) and s.estimate(2) == INF


def test_noiseless_reduction_h1():
    curve = PayoffCurve.exponential(0.8, 0.3)
    mu = curve.table(10)
    for n in range(4, 8):
        s = feed(WindowedArmStats(0.25), list(mu[:n]))
        assert s.h == 1
        for t in (n + 1, n + 10, n + 500):
            assert s.estimate(t) == pytest.approx(red_det_index(mu[n - 1], mu[n - 1] - mu[n - 2], n, t), rel=1e-12)


# -- optimism of the deterministic indices -----------------------------------

def test_rested_optimism_on_suite():
    for curve in make_synthetic_suite(10, 123):
        mu = curve.table(600)
        for n in range(2, 300, 7):
            for t in range(n + 1, 600, 13):
                assert red_det_index(mu[n - 1], mu[n - 1] - mu[n - 2], n, t) >= mu[t - 1] - 1e-12


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10**6), t_prev=st.integers(1, 500), gap1=st.integers(1, 300), gap2=st.integers(1, 300))
def test_restless_optimism(seed, t_prev, gap1, gap2):
    curve = make_synthetic_suite(2, seed)[0]
    t_last, t = t_prev + gap1, t_prev + gap1 + gap2
    mu = curve.values(np.array([t_prev, t_last, t]))
    assert rless_det_index(mu[1], mu[0], t_last, t_prev, t) >= mu[2] - 1e-12


# -- policy -----------------------------------------------------------------

def test_config_validation():
    for bad in (dict(epsilon=0.5), dict(epsilon=0.0), dict(alpha=2.0), dict(sigma=-1.0)):
        with pytest.raises(ConfigurationError):
            RisingConfig(**bad)


def test_cold_start_follows_tie_order():
    pol = RisingPolicy(3, RisingConfig(), rng=np.random.Generator(np.random.Philox(5)))
    assert select_arm(pol, 1) == pol.order[0]


def test_infinite_index_dominates():
    pol = RisingPolicy(2, RisingConfig(mode="rested", deterministic=True))
    for t, r in enumerate([0.2, 0.5], start=1):
        update(pol, 0, r, t)
    assert math.isfinite(pol.index(0, 3)) and pol.index(1, 3) == INF
    assert select_arm(pol, 3) == 1


def test_deterministic_rested_picks_larger_index():
    pol = RisingPolicy(2, RisingConfig(mode="rested", deterministic=True))
    for t, (arm, r) in enumerate([(0, 0.7), (0, 0.8), (1, 0.6), (1, 0.65)], start=1):
        pol.update(arm, r, t)
    assert pol.index(0, 5) > pol.index(1, 5)
    assert select_arm(pol, 5) == 0


def test_policy_names():
    assert RisingPolicy(2, RisingConfig(mode="rested")).name == "R-ed-UCB"
    assert RisingPolicy(2, RisingConfig(mode=RisingMode.RESTLESS)).name == "R-less-UCB"
    assert RisingPolicy(2, RisingConfig(mode="restless_heuristic")).name == "R-less-UCB-H"


def test_bonus_index_uses_t_to_minus_alpha():
    pol = RisingPolicy(1, RisingConfig(mode="restless", sigma=0.1, alpha=3.0))
    for t in range(1, 21):
        pol.update(0, 0.5, t)
    s = pol.arms[0]
    t = 21
    expected = s.estimate(t) + exploration_bonus(0.1, t, s.n, s.h, t ** -3.0)
    assert pol.index(0, t) == pytest.approx(expected, rel=1e-12)
