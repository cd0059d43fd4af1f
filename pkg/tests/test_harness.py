import csv
import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risingbandits.env import ProtocolError, make_synthetic_suite
from risingbandits.harness import (
    ExperimentConfig, Setting, aggregate, rank_algorithms, rank_results, replication_tables, run_experiment,
    run_replication, subsample_step, write_results,
)
from risingbandits.payoff import ConfigurationError, PayoffCurve
from risingbandits.registry import ALL_POLICIES, ORACLE


def synthetic(setting="restless", T=300, K=4, reps=3, policies=None, **kw):
    return ExperimentConfig(setting=setting, T=T, K=K, replications=reps,
                            environment={"type": "synthetic", "seed": 5},
                            policies=policies or ["R-less-UCB", "Rexp3", ORACLE], **kw)


# -- aggregation ------------------------------------------------------------

def test_aggregate_identical_replications_zero_width():
    curve = np.linspace(0, 5, 20)
    agg = aggregate([curve, curve, curve])
    np.testing.assert_allclose(agg.mean, curve)
    assert np.all(agg.half_width == 0.0) and agg.replications == 3


def test_aggregate_two_replications_formula():
    agg = aggregate([np.array([0.0]), np.array([2.0])])
    assert agg.mean[0] == 1.0
    assert agg.half_width[0] == pytest.approx(1.96 * math.sqrt(2) / math.sqrt(2))
    assert agg.half_width[0] == pytest.approx(1.96)


def test_aggregate_single_replication_warns():
    with pytest.warns(RuntimeWarning):
        agg = aggregate([np.arange(4.0)])
    assert agg.single_replication and np.all(agg.half_width == 0.0)


def test_aggregate_ragged_and_empty():
    with pytest.raises(ProtocolError):
        aggregate([np.zeros(3), np.zeros(4)])
    with pytest.raises(ProtocolError):
        aggregate([])


@settings(max_examples=50, deadline=None)
@given(steps=st.lists(st.lists(st.floats(0, 1), min_size=10, max_size=10), min_size=2, max_size=6))
def test_mean_curve_nondecreasing_when_all_runs_are(steps):
    runs = [np.cumsum(s) for s in steps]
    agg = aggregate(runs)
    assert np.all(np.diff(agg.mean) >= -1e-12)
    assert np.all(agg.half_width >= 0.0)


# -- ranking ----------------------------------------------------------------

def test_rank_examples():
    np.testing.assert_array_equal(rank_algorithms([[5, 2, 9]]).ranks[0], [2, 1, 3])
    np.testing.assert_array_equal(rank_algorithms([[1, 1, 4]]).ranks[0], [1.5, 1.5, 3])


def test_rank_sum_conservation():
    rng = np.random.default_rng(0)
    P = 7
    r = rank_algorithms(rng.integers(0, 5, size=(50, P)))
    assert r.mean_rank.sum() == pytest.approx(P * (P + 1) / 2)
    assert np.all(r.half_width >= 0)


def test_rank_single_scenario_zero_width():
    r = rank_algorithms([[3.0, 1.0]], ["a", "b"])
    assert r.policies == ["a", "b"] and np.all(r.half_width == 0.0)


# -- config -----------------------------------------------------------------

@pytest.mark.parametrize("change", [
    {"T": 0}, {"replications": 0}, {"epsilon": 0.5}, {"alpha": 2.0}, {"sigma": -0.1}, {"policies": []},
    {"policies": ["nope"]}, {"policies": ["R-ed-UCB", "R-ed-UCB"]}, {"K": 1},
    {"policies": [{"name": "KL-UCB", "params": {"window": 3}}]},
    {"environment": {"type": "moon"}}, {"setting": "modelsel"},
])
def test_config_errors(change):
    base = dict(setting="restless", T=100, K=3, environment={"type": "synthetic", "seed": 0}, policies=["Rexp3"])
    base.update(change)
    with pytest.raises((ConfigurationError, ValueError)):
        ExperimentConfig(**base).resolved_policies()


def test_config_errors_surface_before_simulation(monkeypatch):
    import risingbandits.harness as h
    cfg = synthetic(policies=["R-less-UCB", {"name": "SW-UCB", "params": {"tau": 0}}])
    monkeypatch.setattr(h, "run_replication", lambda *a, **k: pytest.fail("simulated despite a bad config"))
    with pytest.raises(ConfigurationError):
        run_experiment(cfg)


def test_from_dict_rejects_unknown_and_missing_keys():
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"setting": "rested", "T": 5, "environment": {}, "policies": [], "bogus": 1})
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"setting": "rested", "T": 5})


def test_config_round_trip():
    cfg = synthetic()
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


def test_crossing_must_be_rested():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(setting="restless", T=1000, environment={"type": "crossing"}, policies=["Rexp3"])


# -- running ----------------------------------------------------------------

@pytest.mark.parametrize("name", [p for p in ALL_POLICIES if p != "SW-KL-UCB"])
def test_single_arm_zero_regret(name):
    cfg = ExperimentConfig(setting="rested", T=50, sigma=0.0, replications=1,
                           environment={"type": "curves", "curves": [PayoffCurve.exponential(0.8, 0.1).to_dict()]},
                           policies=[name])
    res = run_experiment(cfg)
    assert np.all(res.regret[name] == 0.0)


def test_single_arm_zero_regret_sw_klucb():
    cfg = ExperimentConfig(setting="rested", T=50, sigma=0.1, replications=1,
                           environment={"type": "curves", "curves": [PayoffCurve.constant(0.3).to_dict()]},
                           policies=["SW-KL-UCB"])
    assert np.all(run_experiment(cfg).regret["SW-KL-UCB"] == 0.0)


def test_restless_greedy_oracle_zero_regret():
    res = run_experiment(synthetic(T=500, K=6, reps=2, sigma=0.0, policies=[ORACLE]))
    assert np.all(res.regret[ORACLE] == 0.0)


def test_restless_regret_increments_within_unit_interval():
    res = run_experiment(synthetic(T=400, K=5, reps=2, policies=[p for p in ALL_POLICIES if p != ORACLE]))
    for curves in res.regret.values():
        inc = np.diff(np.concatenate([np.zeros((curves.shape[0], 1)), curves], axis=1), axis=1)
        assert np.all(inc >= -1.0) and np.all(inc <= 1.0)
        # restless regret against the per-round maximum never decreases
        assert np.all(inc >= -1e-12)


def test_pull_counts_sum_to_horizon():
    res = run_experiment(synthetic(T=200, reps=2))
    for pulls in res.pulls.values():
        assert np.all(pulls.sum(axis=1) == 200)


def test_common_random_numbers_across_policies():
    cfg = synthetic(T=50)
    a, _ = replication_tables(cfg, 1)
    b, _ = replication_tables(cfg, 1)
    c, _ = replication_tables(cfg, 2)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_replication_is_pure_function_of_seed():
    cfg = synthetic(T=200)
    r1, r2 = run_replication(cfg, 2), run_replication(cfg, 2)
    for lab in r1.regret:
        np.testing.assert_array_equal(r1.regret[lab], r2.regret[lab])


def test_modelsel_replication_tables():
    cfg = ExperimentConfig(setting="modelsel", T=100, replications=2,
                           environment={"type": "blobs", "n": 200, "n_eval": 50, "d": 4}, policies=["R-ed-UCB"])
    assert cfg.sigma == 0.5 and cfg.arm_count() == 2
    rewards, payoffs = replication_tables(cfg, 0)
    assert rewards.shape == payoffs.shape == (2, 100)
    assert set(np.unique(rewards)) <= {0.0, 1.0}
    res = run_experiment(cfg)
    assert res.pulls["R-ed-UCB"].sum(axis=1).tolist() == [100, 100]


# -- output -----------------------------------------------------------------

def test_subsample_step():
    assert subsample_step(500) == 1 and subsample_step(20000) == 20 and subsample_step(2999) == 2


def test_write_results_layout(tmp_path):
    cfg = synthetic(T=2999, reps=2)
    out = write_results(run_experiment(cfg), tmp_path / "res")
    with open(out / "curves.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["t", "policy", "mean_regret", "ci_low", "ci_high"]
    ts = [int(r["t"]) for r in rows if r["policy"] == "Rexp3"]
    assert ts[0] == 2 and ts[-1] == 2999 and len(ts) == 1500
    for r in rows:
        assert float(r["ci_low"]) <= float(r["mean_regret"]) <= float(r["ci_high"])
    with open(out / "final.csv", newline="") as fh:
        final = {r["policy"]: r for r in csv.DictReader(fh)}
    last = {r["policy"]: r for r in rows if int(r["t"]) == 2999}
    for lab in final:
        assert final[lab]["mean_regret"] == last[lab]["mean_regret"]
        assert final[lab]["replications"] == "2"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["replication_seeds"] == [[0, 0], [0, 1]]
    assert manifest["config"]["K"] == 4


def test_single_replication_warning_recorded(tmp_path):
    out = write_results(run_experiment(synthetic(T=100, reps=1)), tmp_path / "one")
    assert json.loads((out / "manifest.json").read_text())["warnings"]


def test_parallel_output_is_byte_identical(tmp_path):
    cfg = synthetic(T=500, reps=4)
    a = write_results(run_experiment(cfg, workers=1), tmp_path / "a")
    b = write_results(run_experiment(cfg, workers=3), tmp_path / "b")
    for name in ("curves.csv", "final.csv", "replications.csv", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_rank_results_across_directories(tmp_path):
    dirs = []
    for seed in range(3):
        cfg = synthetic(T=300, reps=2, seed=seed)
        dirs.append(write_results(run_experiment(cfg), tmp_path / f"s{seed}"))
    r = rank_results(dirs)
    assert sorted(r.policies) == sorted(["R-less-UCB", "Rexp3", ORACLE])
    assert r.ranks.shape == (3, 3)
    assert r.mean_rank[r.policies.index(ORACLE)] == 1.0
    with pytest.raises(ConfigurationError):
        rank_results([tmp_path / "missing"])
