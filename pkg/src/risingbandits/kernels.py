"""Run one policy over a precomputed reward table.

The compiled extension is used when it imports; otherwise (or when the
environment variable ``RISINGBANDITS_PURE`` is set) the step-wise Python
policies run the same loop. Both backends return identical pull sequences.
"""

from __future__ import annotations

import os
from typing import Optional

import numpy as np

from .baselines import Baseline
from .registry import ResolvedPolicy, build_policy
from .rising import RisingMode

try:
    if os.environ.get("RISINGBANDITS_PURE"):
        raise ImportError("pure-Python backend requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"

_MODE_CODE = {RisingMode.RESTED: 0, RisingMode.RESTLESS: 1, RisingMode.RESTLESS_HEURISTIC: 2}


def available_backends():
    return ["compiled", "python"] if _compiled is not None else ["python"]


def oracle_arms(payoffs: np.ndarray, rested: bool, T: int) -> np.ndarray:
    """Oracle constant arm (rested) or per-round greedy argmax (restless)."""
    table = payoffs[:, :T]
    if rested:
        return np.full(T, int(np.argmax(table.sum(axis=1))), dtype=np.int64)
    return np.argmax(table, axis=0).astype(np.int64)


def simulate_python(policy, rewards: np.ndarray, rested: bool, T: int) -> np.ndarray:
    arms = np.empty(T, dtype=np.int64)
    counts = [0] * rewards.shape[0]
    for t in range(1, T + 1):
        arm = policy.select(t)
        col = counts[arm] if rested else t - 1
        counts[arm] += 1
        policy.update(arm, float(rewards[arm, col]), t)
        arms[t - 1] = arm
    return arms


def simulate(resolved: ResolvedPolicy, rewards: np.ndarray, rested: bool, T: int,
             rng: np.random.Generator, payoffs: Optional[np.ndarray] = None,
             backend: Optional[str] = None) -> np.ndarray:
    """Pull sequence of ``resolved`` over ``T`` rounds.

    ``rewards[i, j]`` is the reward of arm ``i`` at its ``j+1``-th pull when
    ``rested`` and at round ``j+1`` otherwise. ``payoffs`` is needed only for
    the oracle.
    """
    if resolved.is_oracle:
        if payoffs is None:
            raise ValueError("the oracle needs the payoff table")
        return oracle_arms(payoffs, rested, T)
    backend = backend or BACKEND
    if backend not in ("compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    rewards = np.ascontiguousarray(rewards, dtype=np.float64)
    K = rewards.shape[0]
    if backend == "python" or _compiled is None:
        if backend == "compiled":
            raise RuntimeError("compiled backend requested but the extension is not built")
        return simulate_python(build_policy(resolved, K, rng), rewards, rested, T)

    order = np.asarray(rng.permutation(K), dtype=np.int64)
    if resolved.rising is not None:
        c = resolved.rising
        return _compiled.run_rising(rewards, rested, T, order, c.epsilon, c.alpha, c.sigma,
                                    _MODE_CODE[c.mode], c.deterministic)
    b = resolved.baseline
    if b.algo is Baseline.KLUCB:
        return _compiled.run_klucb(rewards, rested, T, order, b["c"])
    if b.algo is Baseline.SWUCB:
        return _compiled.run_sliding(rewards, rested, T, order, 0, int(b["tau"]), b["xi"])
    if b.algo is Baseline.SWKLUCB:
        return _compiled.run_sliding(rewards, rested, T, order, 1, int(b["tau"]), b["c"])
    if b.algo is Baseline.SWTS:
        return _compiled.run_sliding(rewards, rested, T, order, 2, int(b["tau"]), 0.0, rng)
    if b.algo is Baseline.REXP3:
        return _compiled.run_rexp3(rewards, rested, T, order, b["gamma"], int(b["block"]), rng)
    return _compiled.run_ser4(rewards, rested, T, order, b["delta"], b["explore"], b["reset"],
                              b["horizon"], rng)
