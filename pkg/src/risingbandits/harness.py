"""Seeded experiment runner, aggregation, ranking and CSV output.

Every replication is a pure function of ``(config, master seed, replication
index)``: the environment noise, the learner draw order and each policy's
random stream are derived from those alone. Replications may therefore run in
any order or process and the aggregated output is byte-for-byte the same.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.stats import rankdata

from . import __version__
from .env import ProtocolError, crossing_curves, make_synthetic_suite, noise_table, nonlearnable_curves, \
    payoff_table, regret_curve, served_payoffs
from .kernels import simulate
from .modelsel import LearnerSpec, learner_tables, load_stream, separable_blobs, split_stream
from .payoff import ConfigurationError, PayoffCurve
from .registry import PolicySpec, ResolvedPolicy, policy_rng, resolve


class Setting(str, enum.Enum):
    RESTED = "rested"
    RESTLESS = "restless"
    MODELSEL = "modelsel"


ENV_TYPES = ("synthetic", "crossing", "nonlearnable", "curves", "blobs", "stream")
_LEARNER_ENVS = ("blobs", "stream")
DEFAULT_LEARNERS = [{"scheme": "constant", "beta": 0.1}, {"scheme": "decaying", "beta": 0.1}]


@dataclass
class ExperimentConfig:
    """One experiment: an environment, a list of policies and a replication plan.

    ``environment`` is a dict with a ``type`` key:

    * ``synthetic``: ``seed``, optional ``b_max``; needs ``K``.
    * ``crossing``: optional ``plateau``, ``rate``, ``slope``, ``cap``.
    * ``nonlearnable``: optional ``variant`` ("A"/"B") and ``gamma_max``.
    * ``curves``: ``curves``, a list of serialised payoff curves.
    * ``blobs`` (model selection): optional ``n``, ``n_eval``, ``d``, ``margin``,
      ``seed``, ``learners``.
    * ``stream`` (model selection): ``path``, ``d``, optional ``eval_path``, ``learners``.
    """

    setting: Setting
    T: int
    environment: dict
    policies: List[PolicySpec]
    K: Optional[int] = None
    replications: int = 1
    sigma: Optional[float] = None
    epsilon: float = 0.25
    alpha: float = 3.0
    seed: int = 0
    output: Optional[str] = None

    def __post_init__(self):
        self.setting = Setting(self.setting)
        self.policies = [PolicySpec.parse(p) for p in self.policies]
        if self.sigma is None:
            # {0,1} rewards are 1/2-subgaussian
            self.sigma = 0.5 if self.setting is Setting.MODELSEL else 0.1
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.T, int) or self.T < 1:
            raise ConfigurationError(f"T must be a positive integer, got {self.T!r}")
        if not isinstance(self.replications, int) or self.replications < 1:
            raise ConfigurationError(f"replications must be a positive integer, got {self.replications!r}")
        if not 0.0 < self.epsilon < 0.5:
            raise ConfigurationError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if not self.alpha > 2.0:
            raise ConfigurationError(f"alpha must exceed 2, got {self.alpha}")
        if self.sigma < 0.0:
            raise ConfigurationError("sigma must be >= 0")
        if not self.policies:
            raise ConfigurationError("at least one policy is required")
        labels = [p.label for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ConfigurationError(f"policy labels must be unique, got {labels}")
        kind = self.environment.get("type")
        if kind not in ENV_TYPES:
            raise ConfigurationError(f"environment type must be one of {ENV_TYPES}, got {kind!r}")
        if (self.setting is Setting.MODELSEL) != (kind in _LEARNER_ENVS):
            raise ConfigurationError(f"environment {kind!r} does not fit setting {self.setting.value!r}")
        if kind == "synthetic" and (self.K is None or self.K < 2):
            raise ConfigurationError("the synthetic suite needs K >= 2")
        if kind in ("crossing", "nonlearnable") and self.setting is not Setting.RESTED:
            raise ConfigurationError(f"the {kind} instance is rested")
        if self.K is not None and self.K != self.arm_count():
            raise ConfigurationError(f"K={self.K} disagrees with the environment's {self.arm_count()} arms")

    def arm_count(self) -> int:
        kind = self.environment["type"]
        if kind == "synthetic":
            return int(self.K)
        if kind in ("crossing", "nonlearnable"):
            return 2
        if kind == "curves":
            return len(self.environment.get("curves", []))
        return len(self.environment.get("learners", DEFAULT_LEARNERS))

    @property
    def rested(self) -> bool:
        return self.setting is not Setting.RESTLESS

    def resolved_policies(self) -> List[ResolvedPolicy]:
        K = self.arm_count()
        return [resolve(p, K, self.T, self.sigma, self.epsilon, self.alpha) for p in self.policies]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"setting", "T", "environment", "policies", "K", "replications", "sigma",
                 "epsilon", "alpha", "seed", "output"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
        missing = {"setting", "T", "environment", "policies"} - set(data)
        if missing:
            raise ConfigurationError(f"missing config keys {sorted(missing)}")
        return cls(**data)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "setting": self.setting.value, "T": self.T, "K": self.arm_count(),
            "replications": self.replications, "sigma": self.sigma, "epsilon": self.epsilon,
            "alpha": self.alpha, "seed": self.seed, "environment": self.environment,
            "policies": [p.to_dict() for p in self.policies], "output": self.output,
        }


# -- environments -------------------------------------------------------------

def build_curves(config: ExperimentConfig) -> List[PayoffCurve]:
    env = config.environment
    kind = env["type"]
    if kind == "synthetic":
        return make_synthetic_suite(int(config.K), int(env.get("seed", 0)), float(env.get("b_max", 1000.0)))
    if kind == "crossing":
        shape = {k: float(env[k]) for k in ("plateau", "rate", "slope", "cap") if k in env}
        return crossing_curves(config.T, **shape)
    if kind == "nonlearnable":
        return nonlearnable_curves(config.T, float(env.get("gamma_max", 1.0)), env.get("variant", "A"))
    if kind == "curves":
        return [PayoffCurve.from_dict(c) for c in env["curves"]]
    raise ConfigurationError(f"environment {kind!r} has no payoff curves")


def build_streams(config: ExperimentConfig):
    """``(training stream, held-out set)`` for a model-selection experiment."""
    env = config.environment
    if env["type"] == "blobs":
        n, n_eval = int(env.get("n", 2000)), int(env.get("n_eval", 500))
        data = separable_blobs(n + n_eval, int(env.get("d", 10)), float(env.get("margin", 1.0)),
                               seed=int(env.get("seed", 0)))
        return split_stream(data, n)
    d = int(env["d"])
    stream = load_stream(env["path"], d)
    held_out = load_stream(env["eval_path"], d) if "eval_path" in env else None
    return stream, held_out


def replication_tables(config: ExperimentConfig, replication: int, curves=None, streams=None):
    """``(rewards, payoffs)`` for one replication, shared by every policy."""
    T = config.T
    if config.setting is Setting.MODELSEL:
        stream, held_out = streams if streams is not None else build_streams(config)
        learners = [LearnerSpec.parse(s) for s in config.environment.get("learners", DEFAULT_LEARNERS)]
        return learner_tables(learners, stream, T, seed=[config.seed, replication], eval_set=held_out)
    curves = curves if curves is not None else build_curves(config)
    payoffs = payoff_table(curves, T)
    rewards = payoffs + config.sigma * noise_table([config.seed, replication], len(curves), T)
    return rewards, payoffs


# -- running ------------------------------------------------------------------

@dataclass
class ReplicationResult:
    replication: int
    regret: Dict[str, np.ndarray]
    pulls: Dict[str, np.ndarray]
    best_arm: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    labels: List[str]
    regret: Dict[str, np.ndarray]   # label -> (R, T)
    pulls: Dict[str, np.ndarray]    # label -> (R, K)
    best_arms: np.ndarray           # oracle constant arm (rested) per replication; -1 when restless


def run_replication(config: ExperimentConfig, replication: int, backend: Optional[str] = None,
                    _cache=None) -> ReplicationResult:
    curves, streams = _cache if _cache is not None else (None, None)
    rewards, payoffs = replication_tables(config, replication, curves, streams)
    rested = config.rested
    K, T = payoffs.shape[0], config.T
    regret, pulls = {}, {}
    for res in config.resolved_policies():
        rng = policy_rng(config.seed, replication, res.label)
        arms = simulate(res, rewards, rested, T, rng, payoffs=payoffs, backend=backend)
        regret[res.label] = regret_curve(served_payoffs(arms, payoffs, rested), payoffs, rested)
        pulls[res.label] = np.bincount(arms, minlength=K)
    best = int(np.argmax(payoffs.sum(axis=1))) if rested else -1
    return ReplicationResult(replication, regret, pulls, best)


def _run_one(args):
    data, replication, backend = args
    return run_replication(ExperimentConfig.from_dict(data), replication, backend)


def run_experiment(config: ExperimentConfig, workers: int = 1, backend: Optional[str] = None) -> ExperimentResult:
    """Run every replication and collect curves in replication order."""
    resolved = config.resolved_policies()  # config errors surface before any simulation
    labels = [r.label for r in resolved]
    R = config.replications
    if workers <= 1 or R == 1:
        cache = (build_curves(config), None) if config.setting is not Setting.MODELSEL \
            else (None, build_streams(config))
        results = [run_replication(config, r, backend, cache) for r in range(R)]
    else:
        data = config.to_dict()
        jobs = [(data, r, backend) for r in range(R)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    return ExperimentResult(
        config, labels,
        {lab: np.stack([res.regret[lab] for res in results]) for lab in labels},
        {lab: np.stack([res.pulls[lab] for res in results]) for lab in labels},
        np.array([res.best_arm for res in results], dtype=np.int64),
    )


# -- aggregation --------------------------------------------------------------

@dataclass
class AggregateCurve:
    mean: np.ndarray
    half_width: np.ndarray
    replications: int
    single_replication: bool = False

    @property
    def ci_low(self) -> np.ndarray:
        return self.mean - self.half_width

    @property
    def ci_high(self) -> np.ndarray:
        return self.mean + self.half_width


def aggregate(runs: Union[np.ndarray, Sequence[np.ndarray]]) -> AggregateCurve:
    """Mean and 95% normal half-width ``1.96 s / sqrt(R)`` per round.

    Raises:
        ProtocolError: replications of different lengths.
    """
    if isinstance(runs, np.ndarray):
        arr = np.atleast_2d(np.asarray(runs, dtype=np.float64))
    else:
        lengths = {len(r) for r in runs}
        if len(lengths) > 1:
            raise ProtocolError(f"ragged regret curves: lengths {sorted(lengths)}")
        if not runs:
            raise ProtocolError("no replications to aggregate")
        arr = np.stack([np.asarray(r, dtype=np.float64) for r in runs])
    R = arr.shape[0]
    # centring on the first run makes identical replications give exactly zero spread
    dev = arr - arr[0]
    mean = arr[0] + dev.mean(axis=0)
    if R == 1:
        warnings.warn("one replication: confidence half-width reported as 0", RuntimeWarning, stacklevel=2)
        return AggregateCurve(mean, np.zeros_like(mean), 1, single_replication=True)
    half = 1.96 * dev.std(axis=0, ddof=1) / math.sqrt(R)
    return AggregateCurve(mean, half, R)


@dataclass
class Ranking:
    policies: List[str]
    mean_rank: np.ndarray
    half_width: np.ndarray
    ranks: np.ndarray  # (scenarios, policies)


def rank_algorithms(final_regrets, policies: Optional[Sequence[str]] = None) -> Ranking:
    """Rank 1 = lowest final regret in each scenario; ties share their average rank."""
    mat = np.atleast_2d(np.asarray(final_regrets, dtype=np.float64))
    if mat.shape[0] < 1:
        raise ConfigurationError("need at least one scenario")
    ranks = rankdata(mat, method="average", axis=1)
    S = ranks.shape[0]
    half = 1.96 * ranks.std(axis=0, ddof=1) / math.sqrt(S) if S > 1 else np.zeros(ranks.shape[1])
    names = list(policies) if policies is not None else [str(i) for i in range(mat.shape[1])]
    return Ranking(names, ranks.mean(axis=0), half, ranks)


# -- output -------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def subsample_step(T: int) -> int:
    return max(1, T // 1000)


def write_results(result: ExperimentResult, out_dir: Union[str, Path]) -> Path:
    """Write ``curves.csv``, ``final.csv``, ``replications.csv`` and ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    T = result.config.T
    step = subsample_step(T)
    rounds = list(range(step, T + 1, step))
    if rounds[-1] != T:
        rounds.append(T)
    aggs = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for lab in result.labels:
            aggs[lab] = aggregate(result.regret[lab])
    with open(out / "curves.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "policy", "mean_regret", "ci_low", "ci_high"])
        for lab in result.labels:
            a = aggs[lab]
            for t in rounds:
                w.writerow([t, lab, _fmt(a.mean[t - 1]), _fmt(a.ci_low[t - 1]), _fmt(a.ci_high[t - 1])])
    with open(out / "final.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["policy", "mean_regret", "ci_low", "ci_high", "replications"])
        for lab in result.labels:
            a = aggs[lab]
            w.writerow([lab, _fmt(a.mean[-1]), _fmt(a.ci_low[-1]), _fmt(a.ci_high[-1]), a.replications])
    with open(out / "replications.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        K = next(iter(result.pulls.values())).shape[1]
        w.writerow(["replication", "policy", "final_regret", *[f"pulls_{i}" for i in range(K)]])
        for r in range(result.config.replications):
            for lab in result.labels:
                w.writerow([r, lab, _fmt(result.regret[lab][r, -1]), *result.pulls[lab][r].tolist()])
    manifest = {
        "config": result.config.to_dict(),
        "resolved_policies": [_describe(p) for p in result.config.resolved_policies()],
        "replication_seeds": [[result.config.seed, r] for r in range(result.config.replications)],
        "oracle_arms": result.best_arms.tolist(),
        "subsample_step": step,
        "version": __version__,
        "warnings": sorted({str(c.message) for c in caught}),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out


def _describe(p: ResolvedPolicy) -> dict:
    d = {"label": p.label, "name": p.name}
    if p.rising is not None:
        c = p.rising
        d["params"] = {"epsilon": c.epsilon, "alpha": c.alpha, "sigma": c.sigma, "deterministic": c.deterministic}
    elif p.baseline is not None:
        d["params"] = dict(sorted(p.baseline.values.items()))
    return d


def read_final(results_dir: Union[str, Path]) -> Dict[str, float]:
    path = Path(results_dir) / "final.csv"
    if not path.exists():
        raise ConfigurationError(f"{results_dir}: no final.csv")
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["policy"]: float(row["mean_regret"]) for row in csv.DictReader(fh)}


def rank_results(dirs: Sequence[Union[str, Path]]) -> Ranking:
    """Rank the policies common to every results directory (one scenario each)."""
    finals = [read_final(d) for d in dirs]
    common = [p for p in finals[0] if all(p in f for f in finals[1:])]
    if not common:
        raise ConfigurationError("the results directories share no policy")
    return rank_algorithms([[f[p] for p in common] for f in finals], common)


__all__ = [
    "AggregateCurve", "ExperimentConfig", "ExperimentResult", "Ranking", "ReplicationResult", "Setting",
    "aggregate", "build_curves", "build_streams", "rank_algorithms", "rank_results", "read_final",
    "replication_tables", "run_experiment", "run_replication", "subsample_step", "write_results",
]
