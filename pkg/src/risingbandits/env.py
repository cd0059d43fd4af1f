"""Rested and restless environments, oracle values and regret accounting."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Sequence, Union

import numpy as np

from .payoff import ConfigurationError, PayoffCurve

SeedLike = Union[int, Sequence[int]]


class ProtocolError(RuntimeError):
    """Raised when the round sequencing or trajectory shape contract is broken."""


class Mode(str, enum.Enum):
    RESTED = "rested"
    RESTLESS = "restless"


def _entropy(seed: SeedLike) -> list:
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(s) for s in seed]


def noise_table(seed: SeedLike, K: int, horizon: int) -> np.ndarray:
    """Standard normal draws, one independent Philox stream per arm (row)."""
    base = _entropy(seed)
    out = np.empty((K, horizon))
    for i in range(K):
        gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(base + [i])))
        out[i] = gen.standard_normal(horizon)
    return out


def payoff_table(curves: Sequence[PayoffCurve], horizon: int) -> np.ndarray:
    """``table[i, n-1] = mu_i(n)`` for ``n = 1..horizon``."""
    return np.vstack([c.table(horizon) for c in curves])


@dataclass
class Pull:
    t: int
    arm: int
    reward: float
    expected: float


@dataclass
class Trajectory:
    pulls: List[Pull] = field(default_factory=list)

    def append(self, pull: Pull) -> None:
        if pull.t != len(self.pulls) + 1:
            raise ProtocolError(f"round {pull.t} out of sequence (expected {len(self.pulls) + 1})")
        self.pulls.append(pull)

    def __len__(self) -> int:
        return len(self.pulls)

    @property
    def arms(self) -> np.ndarray:
        return np.array([p.arm for p in self.pulls], dtype=np.int64)

    @property
    def expected(self) -> np.ndarray:
        return np.array([p.expected for p in self.pulls])

    @property
    def rewards(self) -> np.ndarray:
        return np.array([p.reward for p in self.pulls])


class BanditEnv:
    """A rested or restless bandit with Gaussian noise.

    Noise is drawn up front from per-arm streams: the n-th pull of a rested
    arm and round t of a restless arm always see the same draw, whatever the
    policy does. This is what lets different policies share noise realisations.
    """

    def __init__(self, mode, curves: Sequence[PayoffCurve], sigma: float = 0.0,
                 seed: SeedLike = 0, horizon: int = 1000):
        self.mode = Mode(mode)
        self.curves = list(curves)
        if not self.curves:
            raise ConfigurationError("an environment needs at least one arm")
        if sigma < 0:
            raise ConfigurationError(f"sigma must be >= 0, got {sigma}")
        if horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        self.sigma = float(sigma)
        self.horizon = int(horizon)
        self.seed = _entropy(seed)
        self.payoffs = payoff_table(self.curves, self.horizon)
        if sigma > 0:
            self.rewards = self.payoffs + self.sigma * noise_table(self.seed, self.K, self.horizon)
        else:
            self.rewards = self.payoffs.copy()
        self.pull_counts = np.zeros(self.K, dtype=np.int64)
        self.trajectory = Trajectory()

    @property
    def K(self) -> int:
        return len(self.curves)

    @property
    def rested(self) -> bool:
        return self.mode is Mode.RESTED

    def reset(self) -> None:
        self.pull_counts[:] = 0
        self.trajectory = Trajectory()

    def pull(self, arm: int, t: int):
        """Serve round ``t`` on ``arm``; returns ``(reward, expected)``."""
        if not 0 <= arm < self.K:
            raise IndexError(f"arm {arm} out of range for K={self.K}")
        if t != len(self.trajectory) + 1:
            raise ProtocolError(f"round {t} out of sequence (expected {len(self.trajectory) + 1})")
        if t > self.horizon:
            raise ProtocolError(f"round {t} beyond horizon {self.horizon}")
        col = self.pull_counts[arm] if self.rested else t - 1
        expected = float(self.payoffs[arm, col])
        reward = float(self.rewards[arm, col])
        self.pull_counts[arm] += 1
        self.trajectory.append(Pull(t, arm, reward, expected))
        return reward, expected


def oracle_value(mode, curves: Sequence[PayoffCurve], T: int) -> float:
    """Expected reward of the optimal policy over ``T`` rounds."""
    if T < 1:
        raise ValueError("T must be >= 1")
    table = payoff_table(curves, T)
    if Mode(mode) is Mode.RESTED:
        return float(np.max(table.sum(axis=1)))
    return float(table.max(axis=0).sum())


def served_payoffs(arms: np.ndarray, table: np.ndarray, rested: bool) -> np.ndarray:
    """Expected payoff collected at each round by the pull sequence ``arms``."""
    arms = np.asarray(arms, dtype=np.int64)
    T = arms.shape[0]
    if not rested:
        return table[arms, np.arange(T)]
    onehot = np.zeros((table.shape[0], T), dtype=np.int64)
    onehot[arms, np.arange(T)] = 1
    pull_index = np.cumsum(onehot, axis=1)[arms, np.arange(T)] - 1
    return table[arms, pull_index]


def regret_curve(served: np.ndarray, table: np.ndarray, rested: bool) -> np.ndarray:
    """Cumulative regret given the expected payoffs served at each round.

    For rested bandits the prefix uses the arm that is optimal at the horizon,
    so intermediate values may be negative.
    """
    T = served.shape[0]
    table = table[:, :T]
    if rested:
        best = int(np.argmax(table.sum(axis=1)))
        reference = table[best]
    else:
        reference = table.max(axis=0)
    return np.cumsum(reference - served)


def empirical_regret(traj: Trajectory, mode, curves: Sequence[PayoffCurve], T: int) -> np.ndarray:
    if len(traj) != T:
        raise ProtocolError(f"trajectory has {len(traj)} pulls, expected {T}")
    table = payoff_table(curves, T)
    return regret_curve(traj.expected, table, Mode(mode) is Mode.RESTED)


def make_synthetic_suite(K: int, seed: int, b_max: float = 1000.0) -> List[PayoffCurve]:
    """Random exponential / polynomial rising curves, each family with probability 1/2."""
    if K < 2:
        raise ConfigurationError("a synthetic suite needs K >= 2")
    rng = np.random.Generator(np.random.Philox(seed))
    curves = []
    for _ in range(K):
        family = rng.random()
        c = 1.0 - rng.random()
        if family < 0.5:
            a = 1.0 - rng.random()
            curves.append(PayoffCurve.exponential(c, a))
        else:
            b = rng.uniform(0.0, b_max)
            rho = 1.0 - rng.random()
            curves.append(PayoffCurve.polynomial(c, b, rho))
    return curves


def nonlearnable_curves(T: int, gamma_max: float = 1.0, variant: str = "A") -> List[PayoffCurve]:
    if T < 3:
        raise ConfigurationError("T must be >= 3")
    if not 0.0 < gamma_max <= 1.0:
        raise ConfigurationError("gamma_max must lie in (0, 1]")
    first = PayoffCurve.constant(gamma_max / 2)
    if variant.upper() == "A":
        second = PayoffCurve.step(0.0, gamma_max, T // 3)
    elif variant.upper() == "B":
        second = PayoffCurve.constant(0.0)
    else:
        raise ConfigurationError(f"unknown variant {variant!r}")
    return [first, second]


def make_nonlearnable_instance(T: int, gamma_max: float = 1.0, variant: str = "A") -> BanditEnv:
    """Two-armed non-concave rested instance on which every policy has linear regret."""
    return BanditEnv(Mode.RESTED, nonlearnable_curves(T, gamma_max, variant), sigma=0.0, horizon=T)


def crossing_curves(T: int, plateau: float = 0.4, rate: float = 100.0,
                    slope: float = 1.8, cap: float = 0.9) -> List[PayoffCurve]:
    if T < 400:
        raise ConfigurationError("the crossing instance needs T >= 400")
    return [
        PayoffCurve.exponential(plateau, rate / T),
        PayoffCurve.piecewise_linear_cap(slope / T, cap),
    ]


def make_crossing_instance(T: int, sigma: float = 0.0, seed: SeedLike = 0, **shape) -> BanditEnv:
    """Two-armed rested instance: a fast low plateau against a slow ramp to a higher cap."""
    return BanditEnv(Mode.RESTED, crossing_curves(T, **shape), sigma=sigma, seed=seed, horizon=T)


def crossing_point(T: int, plateau: float = 0.4, slope: float = 1.8) -> float:
    """Pull count at which the linear ramp overtakes the plateau."""
    return plateau * T / slope


def oracle_constant_arm(curves: Sequence[PayoffCurve], T: int) -> int:
    return int(np.argmax(payoff_table(curves, T).sum(axis=1)))


def greedy_arms(curves: Sequence[PayoffCurve], T: int) -> np.ndarray:
    """Per-round argmax arm (lowest index on ties)."""
    return np.argmax(payoff_table(curves, T), axis=0).astype(np.int64)


__all__ = [
    "BanditEnv", "Mode", "ProtocolError", "Pull", "Trajectory", "crossing_curves",
    "crossing_point", "empirical_regret", "greedy_arms", "make_crossing_instance",
    "make_nonlearnable_instance", "make_synthetic_suite", "noise_table", "nonlearnable_curves",
    "oracle_constant_arm", "oracle_value", "payoff_table", "regret_curve", "served_payoffs",
]
