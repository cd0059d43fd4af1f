"""Policy names, parameter resolution and construction of step-wise policy objects."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from ._base import Policy
from .baselines import Baseline, BaselineParams, default_params, make_baseline
from .payoff import ConfigurationError
from .rising import RisingConfig, RisingMode, RisingPolicy

RISING_NAMES = {
    "R-ed-UCB": RisingMode.RESTED,
    "R-less-UCB": RisingMode.RESTLESS,
    "R-less-UCB-H": RisingMode.RESTLESS_HEURISTIC,
}
BASELINE_NAMES = {b.value: b for b in Baseline}
ORACLE = "oracle"
ALL_POLICIES = [*RISING_NAMES, *BASELINE_NAMES, ORACLE]


@dataclass(frozen=True)
class PolicySpec:
    """A named policy with explicit parameter overrides."""

    name: str
    params: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def parse(cls, item) -> "PolicySpec":
        if isinstance(item, PolicySpec):
            return item
        if isinstance(item, str):
            return cls(item)
        if isinstance(item, dict) and "name" in item:
            return cls(item["name"], dict(item.get("params", {})))
        raise ConfigurationError(f"cannot parse policy entry {item!r}")

    @property
    def label(self) -> str:
        return self.params.get("label", self.name)

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


@dataclass(frozen=True)
class ResolvedPolicy:
    label: str
    name: str
    rising: Optional[RisingConfig] = None
    baseline: Optional[BaselineParams] = None

    @property
    def is_oracle(self) -> bool:
        return self.name == ORACLE


def resolve(policy: PolicySpec, K: int, T: int, sigma: float,
            epsilon: float = 0.25, alpha: float = 3.0) -> ResolvedPolicy:
    """Fill in defaults and validate a policy before any simulation runs."""
    p = dict(policy.params)
    p.pop("label", None)
    if policy.name in RISING_NAMES:
        allowed = {"epsilon", "alpha", "sigma", "deterministic"}
        unknown = set(p) - allowed
        if unknown:
            raise ConfigurationError(f"{policy.name}: unknown parameters {sorted(unknown)}")
        cfg = RisingConfig(
            epsilon=float(p.get("epsilon", epsilon)),
            alpha=float(p.get("alpha", alpha)),
            sigma=float(p.get("sigma", sigma)),
            mode=RISING_NAMES[policy.name],
            deterministic=bool(p.get("deterministic", False)),
        )
        return ResolvedPolicy(policy.label, policy.name, rising=cfg)
    if policy.name in BASELINE_NAMES:
        algo = BASELINE_NAMES[policy.name]
        sigma_for_defaults = sigma
        if algo is Baseline.SWKLUCB and sigma <= 0 and "tau" in p:
            sigma_for_defaults = 1.0  # window supplied explicitly
        # defaults are defined for K >= 2; with a single arm there is nothing to tune
        base = default_params(algo, max(K, 2), max(T, 2), sigma_for_defaults)
        unknown = set(p) - set(base.values)
        if unknown:
            raise ConfigurationError(f"{policy.name}: unknown parameters {sorted(unknown)}")
        values = {**base.values, **{k: float(v) for k, v in p.items()}}
        return ResolvedPolicy(policy.label, policy.name, baseline=BaselineParams(algo, values))
    if policy.name == ORACLE:
        if p:
            raise ConfigurationError("the oracle policy takes no parameters")
        return ResolvedPolicy(policy.label, ORACLE)
    raise ConfigurationError(f"unknown policy {policy.name!r}; choose from {ALL_POLICIES}")


def policy_rng(seed, replication: int, label: str) -> np.random.Generator:
    """Independent Philox stream per (seed, replication, policy label)."""
    tag = zlib.crc32(label.encode("utf-8"))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replication), 1, tag])))


def build_policy(resolved: ResolvedPolicy, K: int, rng: Optional[np.random.Generator] = None) -> Policy:
    if resolved.rising is not None:
        return RisingPolicy(K, resolved.rising, rng)
    if resolved.baseline is not None:
        return make_baseline(resolved.baseline.algo, K, resolved.baseline, rng)
    raise ConfigurationError("the oracle is not a step-wise policy; it needs the payoff table")
