import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risingbandits.env import make_synthetic_suite, noise_table, payoff_table
from risingbandits.kernels import available_backends, oracle_arms, simulate
from risingbandits.registry import ALL_POLICIES, ORACLE, PolicySpec, policy_rng, resolve

needs_compiled = pytest.mark.skipif("compiled" not in available_backends(), reason="extension not built")
STEPWISE = [name for name in ALL_POLICIES if name != ORACLE]


def tables(K, T, seed, sigma=0.1):
    payoffs = payoff_table(make_synthetic_suite(K, seed), T)
    return payoffs, payoffs + sigma * noise_table([seed, 0], K, T)


def run(name, rewards, rested, T, backend, seed=0, sigma=0.1):
    K = rewards.shape[0]
    resolved = resolve(PolicySpec(name), K, T, sigma)
    return simulate(resolved, rewards, rested, T, policy_rng(seed, 0, name), backend=backend)


@needs_compiled
@pytest.mark.parametrize("name", STEPWISE)
@pytest.mark.parametrize("rested", [True, False])
def test_backends_give_identical_pull_sequences(name, rested):
    K, T = 5, 1500
    _, rewards = tables(K, T, 3)
    a = run(name, rewards, rested, T, "compiled")
    b = run(name, rewards, rested, T, "python")
    np.testing.assert_array_equal(a, b)


@needs_compiled
@settings(max_examples=15, deadline=None)
@given(name=st.sampled_from(STEPWISE), K=st.integers(2, 6), T=st.integers(1, 400), seed=st.integers(0, 10**4),
       rested=st.booleans(), sigma=st.sampled_from([0.0, 0.05, 0.5]))
def test_backends_agree_on_random_instances(name, K, T, seed, rested, sigma):
    _, rewards = tables(K, T, seed, sigma)
    if name == "SW-KL-UCB" and sigma == 0.0:
        sigma = 0.1
    a = run(name, rewards, rested, T, "compiled", seed, sigma)
    b = run(name, rewards, rested, T, "python", seed, sigma)
    np.testing.assert_array_equal(a, b)


def test_pull_sequences_are_valid_arms():
    K, T = 4, 300
    _, rewards = tables(K, T, 1)
    for name in STEPWISE:
        arms = run(name, rewards, False, T, None)
        assert arms.shape == (T,) and arms.min() >= 0 and arms.max() < K


def test_oracle_arms():
    payoffs = np.array([[0.1, 0.9, 0.2], [0.5, 0.5, 0.5]])
    np.testing.assert_array_equal(oracle_arms(payoffs, False, 3), [1, 0, 1])
    np.testing.assert_array_equal(oracle_arms(payoffs, True, 3), [1, 1, 1])
    with pytest.raises(ValueError):
        simulate(resolve(PolicySpec(ORACLE), 2, 3, 0.1), payoffs, True, 3, policy_rng(0, 0, ORACLE))


def test_unknown_backend_rejected():
    _, rewards = tables(2, 10, 0)
    with pytest.raises(ValueError):
        run("KL-UCB", rewards, True, 10, "gpu")
