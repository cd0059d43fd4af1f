"""Optimistic indices for rising bandits and the policies built on them.

The stochastic estimator averages ``h`` one-step projections taken from the
last ``h`` rewards of an arm, where ``h = floor(epsilon * n)`` grows with the
pull count ``n``. Four running sums make its evaluation O(1) per round and its
update O(1) per pull.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ._base import INF, Policy, argmax_ordered
from .payoff import ConfigurationError


class InvariantError(RuntimeError):
    """Internal state broke an invariant that the update rules guarantee."""


class RisingMode(str, enum.Enum):
    RESTED = "rested"
    RESTLESS = "restless"
    RESTLESS_HEURISTIC = "restless_heuristic"


@dataclass(frozen=True)
class RisingConfig:
    epsilon: float = 0.25
    alpha: float = 3.0
    sigma: float = 0.1
    mode: RisingMode = RisingMode.RESTLESS
    deterministic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", RisingMode(self.mode))
        if not 0.0 < self.epsilon < 0.5:
            raise ConfigurationError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if not self.alpha > 2.0:
            raise ConfigurationError(f"alpha must exceed 2, got {self.alpha}")
        if self.sigma < 0.0:
            raise ConfigurationError(f"sigma must be >= 0, got {self.sigma}")


def window_size(n: int, epsilon: float) -> int:
    return int(math.floor(epsilon * n))


def red_det_index(mu_last: float, gamma_last: float, n: int, t: int) -> float:
    """Rested noiseless index: last payoff plus the last increment projected to pull ``t``."""
    if n < 2:
        return INF
    return mu_last + (t - n) * gamma_last


def rless_det_index(mu_last: float, mu_prev: float, t_last: int, t_prev: int, t: int) -> float:
    """Restless noiseless index: linear extrapolation through the last two observed payoffs."""
    if t_last == t_prev:
        raise ValueError("pull times of two distinct pulls cannot coincide")
    return mu_last + (t - t_last) * (mu_last - mu_prev) / (t_last - t_prev)


def exploration_bonus(sigma: float, t: int, n: int, h: int, delta: float) -> float:
    if h == 0:
        return INF
    return _bonus(sigma, t, n, h, -math.log(delta))


def _bonus(sigma: float, t: int, n: int, h: int, log_inv_delta: float) -> float:
    return sigma * (t - n + h - 1) * math.sqrt(10.0 * log_inv_delta / (h * h * h))


class WindowedArmStats:
    """Reward history of one arm plus running window sums.

    With ``r(l)`` the reward of the l-th pull, ``n`` pulls and window ``h``::

        acc_a = sum_{l=n-h+1}^{n} r(l)         acc_c = sum_{l=n-h+1}^{n} l r(l)
        acc_b = sum_{l=n-2h+1}^{n-h} r(l)      acc_d = sum_{l=n-h+1}^{n} l r(l-h)

    ``track_heuristic`` additionally keeps the sums needed by the variant that
    scales increments by elapsed rounds instead of by ``h``.
    """

    def __init__(self, epsilon: float, track_heuristic: bool = False):
        self.epsilon = epsilon
        self.n = 0
        self.h = 0
        self.rewards: List[float] = []
        self.pull_times: List[int] = []
        self.acc_a = self.acc_b = self.acc_c = self.acc_d = 0.0
        self.track_heuristic = track_heuristic
        # heuristic sums: rewards, slopes and round-weighted slopes over the window
        self.h_r = self.h_s = self.h_ts = 0.0

    def r(self, l: int) -> float:
        return self.rewards[l - 1]

    def update(self, reward: float, t: int) -> None:
        self.rewards.append(reward)
        self.pull_times.append(t)
        self.n += 1
        n = self.n
        h_prev = self.h
        h = window_size(n, self.epsilon)
        self.h = h
        r = self.r
        if h == 0:
            return
        if h == h_prev:
            self.acc_a = self.acc_a + r(n) - r(n - h)
            self.acc_b = self.acc_b + r(n - h) - r(n - 2 * h)
            self.acc_c = self.acc_c + n * r(n) - (n - h) * r(n - h)
            self.acc_d = self.acc_d + n * r(n - h) - (n - h) * r(n - 2 * h)
        elif h == h_prev + 1:
            self.acc_a = self.acc_a + r(n)
            self.acc_b = self.acc_b + r(n - 2 * h + 1)
            self.acc_c = self.acc_c + n * r(n)
            self.acc_d = self.acc_d + (n - h) * r(n - 2 * h + 1) + self.acc_b
        else:
            raise InvariantError(f"window jumped from {h_prev} to {h}")
        if self.track_heuristic:
            self._update_heuristic(h, h_prev)

    def _slope(self, l: int, h: int) -> float:
        tl, tp = self.pull_times[l - 1], self.pull_times[l - h - 1]
        return (self.rewards[l - 1] - self.rewards[l - h - 1]) / (tl - tp)

    def _update_heuristic(self, h: int, h_prev: int) -> None:
        n = self.n
        if h == h_prev:
            s_new = self._slope(n, h)
            s_old = self._slope(n - h, h)
            self.h_r = self.h_r + self.rewards[n - 1] - self.rewards[n - h - 1]
            self.h_s = self.h_s + s_new - s_old
            self.h_ts = self.h_ts + self.pull_times[n - 1] * s_new - self.pull_times[n - h - 1] * s_old
            return
        # window grew: every slope changes its lag, rebuild in O(h)
        hr = hs = hts = 0.0
        for l in range(n - h + 1, n + 1):
            s = self._slope(l, h)
            hr = hr + self.rewards[l - 1]
            hs = hs + s
            hts = hts + self.pull_times[l - 1] * s
        self.h_r, self.h_s, self.h_ts = hr, hs, hts

    def valid(self) -> bool:
        return 0 < self.h <= self.n // 2

    def estimate(self, t: int) -> float:
        """Windowed estimate of the payoff at ``t`` from the running sums."""
        if not self.valid():
            return INF
        h = self.h
        return (self.acc_a + t * (self.acc_a - self.acc_b) / h - (self.acc_c - self.acc_d) / h) / h

    def heuristic(self, t: int) -> float:
        if not self.valid():
            return INF
        if not self.track_heuristic:
            return heuristic_estimate(self, t)
        return (self.h_r + t * self.h_s - self.h_ts) / self.h

    def naive_sums(self):
        """``(a, b, c, d)`` recomputed from the reward list."""
        n, h, r = self.n, self.h, self.r
        if h == 0:
            return 0.0, 0.0, 0.0, 0.0
        a = sum(r(l) for l in range(n - h + 1, n + 1))
        b = sum(r(l) for l in range(n - 2 * h + 1, n - h + 1))
        c = sum(l * r(l) for l in range(n - h + 1, n + 1))
        d = sum(l * r(l - h) for l in range(n - h + 1, n + 1))
        return a, b, c, d


def windowed_estimate(stats: WindowedArmStats, t: int) -> float:
    return stats.estimate(t)


def naive_windowed_estimate(rewards, h: int, t: int) -> float:
    """Direct O(h) evaluation of the windowed estimator from a reward list."""
    n = len(rewards)
    if h == 0 or h > n // 2:
        return INF
    total = 0.0
    for l in range(n - h + 1, n + 1):
        r_l, r_lag = rewards[l - 1], rewards[l - h - 1]
        total += r_l + (t - l) * (r_l - r_lag) / h
    return total / h


def heuristic_estimate(stats: WindowedArmStats, t: int) -> float:
    """O(h) evaluation of the elapsed-rounds variant of the windowed estimator."""
    n, h = stats.n, stats.h
    if h == 0 or h > n // 2:
        return INF
    rw, pt = stats.rewards, stats.pull_times
    total = 0.0
    for l in range(n - h + 1, n + 1):
        total += rw[l - 1] + (t - pt[l - 1]) * (rw[l - 1] - rw[l - h - 1]) / (pt[l - 1] - pt[l - h - 1])
    return total / h


class RisingPolicy(Policy):
    """Optimistic policy for rising bandits (R-ed-UCB, R-less-UCB and the heuristic variant).

    In deterministic mode the index is the noiseless extrapolation from the last
    two rewards; otherwise it is the windowed estimate plus the exploration bonus
    with confidence ``t ** -alpha``.
    """

    def __init__(self, K: int, config: RisingConfig, rng: Optional[np.random.Generator] = None):
        super().__init__(K, rng)
        self.config = config
        heuristic = config.mode is RisingMode.RESTLESS_HEURISTIC
        self.heuristic = heuristic
        self.arms = [WindowedArmStats(config.epsilon, track_heuristic=heuristic) for _ in range(K)]

    @property
    def name(self) -> str:
        return {
            RisingMode.RESTED: "R-ed-UCB",
            RisingMode.RESTLESS: "R-less-UCB",
            RisingMode.RESTLESS_HEURISTIC: "R-less-UCB-H",
        }[self.config.mode]

    def index(self, arm: int, t: int) -> float:
        s = self.arms[arm]
        cfg = self.config
        if cfg.deterministic:
            if s.n < 2:
                return INF
            if cfg.mode is RisingMode.RESTED:
                return red_det_index(s.rewards[-1], s.rewards[-1] - s.rewards[-2], s.n, t)
            return rless_det_index(s.rewards[-1], s.rewards[-2], s.pull_times[-1], s.pull_times[-2], t)
        if not s.valid():
            return INF
        est = s.heuristic(t) if self.heuristic else s.estimate(t)
        return est + _bonus(cfg.sigma, t, s.n, s.h, cfg.alpha * math.log(t))

    def indices(self, t: int) -> List[float]:
        return [self.index(i, t) for i in range(self.K)]

    def select(self, t: int) -> int:
        return argmax_ordered(self.indices(t), self.order)

    def update(self, arm: int, reward: float, t: int) -> None:
        self.arms[arm].update(reward, t)


def select_arm(policy: RisingPolicy, t: int) -> int:
    return policy.select(t)


def update(policy: RisingPolicy, arm: int, reward: float, t: int) -> None:
    policy.update(arm, reward, t)
