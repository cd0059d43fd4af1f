"""Shared policy plumbing: the step interface, ordered argmax and exact sliding windows."""

from __future__ import annotations

import math
from collections import deque
from typing import Sequence

import numpy as np

INF = math.inf

# Clipped rewards are stored as integer multiples of 2**-32 so that window
# sums are exact: removing and re-adding an observation restores them bit for bit.
FIXED_SCALE = 4294967296.0


def quantize(reward: float) -> int:
    """Clip to [0, 1] and convert to fixed point."""
    if reward <= 0.0:
        return 0
    if reward >= 1.0:
        return int(FIXED_SCALE)
    return int(reward * FIXED_SCALE + 0.5)


def argmax_ordered(values: Sequence[float], order: Sequence[int]) -> int:
    """Index of the largest value; ties go to the arm appearing first in ``order``."""
    best = order[0]
    best_val = values[best]
    for i in order[1:]:
        v = values[i]
        if v > best_val:
            best, best_val = i, v
    return int(best)


class Policy:
    """Step interface shared by every bandit policy.

    ``select(t)`` is called once per round, then ``update(arm, reward, t)``
    with the reward of the arm it returned.
    """

    name = "policy"

    def __init__(self, K: int, rng: np.random.Generator | None = None):
        if K < 1:
            raise ValueError("K must be >= 1")
        self.K = K
        self.rng = rng if rng is not None else np.random.Generator(np.random.Philox(0))
        # fixed tie-breaking order, drawn before anything else uses the stream
        self.order = [int(i) for i in self.rng.permutation(K)]

    def select(self, t: int) -> int:
        raise NotImplementedError

    def update(self, arm: int, reward: float, t: int) -> None:
        raise NotImplementedError


class SlidingWindow:
    """Per-arm sums over the last ``tau`` rounds, in exact fixed point."""

    def __init__(self, K: int, tau: int):
        if tau < 1:
            raise ValueError("window length must be >= 1")
        self.K = K
        self.tau = int(tau)
        self.sums = [0] * K
        self.counts = [0] * K
        self._buffer = deque()

    def add(self, arm: int, reward: float) -> None:
        q = quantize(reward)
        self._buffer.append((arm, q))
        self.sums[arm] += q
        self.counts[arm] += 1
        if len(self._buffer) > self.tau:
            old_arm, old_q = self._buffer.popleft()
            self.sums[old_arm] -= old_q
            self.counts[old_arm] -= 1

    def remove(self, arm: int, reward: float) -> None:
        """Undo the effect of one observation (used for property checks)."""
        q = quantize(reward)
        self.sums[arm] -= q
        self.counts[arm] -= 1

    def mean(self, arm: int) -> float:
        return self.sums[arm] / FIXED_SCALE / self.counts[arm]

    def successes(self, arm: int) -> float:
        return self.sums[arm] / FIXED_SCALE

    def failures(self, arm: int) -> float:
        return self.counts[arm] - self.sums[arm] / FIXED_SCALE
