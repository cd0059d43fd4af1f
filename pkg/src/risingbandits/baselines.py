"""Comparison policies for non-stationary bandits and their default parameterisations."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ._base import INF, Policy, SlidingWindow, argmax_ordered
from .payoff import ConfigurationError

KL_TOL = 1e-6
KL_MAX_ITER = 100


class Baseline(str, enum.Enum):
    REXP3 = "Rexp3"
    KLUCB = "KL-UCB"
    SER4 = "Ser4"
    SWUCB = "SW-UCB"
    SWKLUCB = "SW-KL-UCB"
    SWTS = "SW-TS"


@dataclass(frozen=True)
class BaselineParams:
    algo: Baseline
    values: Dict[str, float] = field(default_factory=dict)

    def __getitem__(self, key: str) -> float:
        return self.values[key]

    def __post_init__(self):
        object.__setattr__(self, "algo", Baseline(self.algo))
        v = self.values
        if "gamma" in v and not 0.0 < v["gamma"] <= 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1], got {v['gamma']}")
        if "tau" in v and (v["tau"] < 1 or int(v["tau"]) != v["tau"]):
            raise ConfigurationError(f"tau must be a positive integer, got {v['tau']}")
        if "block" in v and (v["block"] < 1 or int(v["block"]) != v["block"]):
            raise ConfigurationError(f"block length must be a positive integer, got {v['block']}")
        if "xi" in v and v["xi"] <= 0:
            raise ConfigurationError(f"xi must be positive, got {v['xi']}")
        for key in ("delta", "explore", "reset"):
            if key in v and not 0.0 < v[key] < 1.0:
                raise ConfigurationError(f"{key} must lie in (0, 1), got {v[key]}")


def _window(x: float) -> int:
    return max(1, int(round(x)))


def default_params(algo, K: int, T: int, sigma: float = 0.1) -> BaselineParams:
    """Recommended settings for each baseline, natural logs throughout."""
    algo = Baseline(algo)
    if K < 2 or T < 2:
        raise ConfigurationError("default parameters need K >= 2 and T >= 2")
    logK = math.log(K)
    if algo is Baseline.REXP3:
        variation = float(K)
        block = math.ceil((K * logK) ** (1.0 / 3.0) * (T / variation) ** (2.0 / 3.0))
        gamma = min(1.0, math.sqrt(K * logK / ((math.e - 1.0) * block)))
        return BaselineParams(algo, {"variation": variation, "gamma": gamma, "block": block})
    if algo is Baseline.KLUCB:
        return BaselineParams(algo, {"c": 3.0})
    if algo is Baseline.SER4:
        return BaselineParams(algo, {
            "delta": 1.0 / T,
            "explore": 1.0 / (K * T),
            "reset": math.sqrt(K / (T * K * math.log(K * T))),
            "horizon": float(T),
        })
    if algo is Baseline.SWUCB:
        return BaselineParams(algo, {"tau": _window(4.0 * math.sqrt(T * math.log(T))), "xi": 0.6})
    if algo is Baseline.SWKLUCB:
        if sigma <= 0:
            raise ConfigurationError("SW-KL-UCB window sigma**(-4/5) is undefined for sigma = 0")
        return BaselineParams(algo, {"tau": _window(sigma ** -0.8), "c": 3.0})
    return BaselineParams(algo, {"beta": 0.5, "tau": _window(T ** 0.5)})


# -- KL-UCB -----------------------------------------------------------------

def kl_bernoulli(p: float, q: float) -> float:
    """Bernoulli divergence ``kl(p, q)`` for ``p`` in [0, 1] and ``q`` in (0, 1)."""
    if p <= 0.0:
        return -math.log(1.0 - q) if q < 1.0 else INF
    if p >= 1.0:
        return -math.log(q) if q > 0.0 else INF
    if q >= 1.0 or q <= 0.0:
        return INF
    return p * math.log(p / q) + (1.0 - p) * math.log((1.0 - p) / (1.0 - q))


def klucb_budget(m: float, c: float) -> float:
    """``log m + c log log m`` clamped at zero."""
    if m <= 1.0:
        return 0.0
    lm = math.log(m)
    return max(0.0, lm + c * math.log(lm))


def klucb_bound(mean: float, n: int, budget: float) -> float:
    """Largest ``q`` in ``[mean, 1]`` with ``n kl(mean, q) <= budget``, found by bisection."""
    if mean >= 1.0:
        return 1.0
    if mean < 0.0:
        mean = 0.0
    if budget <= 0.0:
        return mean
    lo = mean
    hi = min(1.0, mean + math.sqrt(budget / (2.0 * n)))
    if hi < 1.0 and n * kl_bernoulli(mean, hi) <= budget:
        return hi
    for _ in range(KL_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if n * kl_bernoulli(mean, mid) <= budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= KL_TOL and budget - n * kl_bernoulli(mean, lo) <= KL_TOL:
            break
    return lo


def klucb_index(mean: float, n: int, t: int, c: float = 3.0) -> float:
    return klucb_bound(mean, n, klucb_budget(t, c))


def swucb_index(window_sum: float, window_count: int, t: int, tau: int, xi: float) -> float:
    if window_count == 0:
        return INF
    return window_sum / window_count + math.sqrt(xi * math.log(min(t, tau)) / window_count)


def swklucb_index(window_mean: float, window_count: int, t: int, tau: int, c: float = 3.0) -> float:
    if window_count == 0:
        return INF
    return klucb_bound(window_mean, window_count, klucb_budget(min(t, tau), c))


def swts_sample(successes: Sequence[float], failures: Sequence[float], rng: np.random.Generator) -> List[float]:
    """One Beta(1 + S_i, 1 + F_i) draw per arm, in arm order."""
    return [float(rng.beta(1.0 + s, 1.0 + f)) for s, f in zip(successes, failures)]


def rexp3_probabilities(weights: Sequence[float], gamma: float) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    return (1.0 - gamma) * w / w.sum() + gamma / len(w)


def clip01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


# -- policies ---------------------------------------------------------------

class KLUCBPolicy(Policy):
    name = "KL-UCB"

    def __init__(self, K: int, params: BaselineParams, rng=None):
        super().__init__(K, rng)
        self.c = params["c"]
        self.sums = [0.0] * K
        self.counts = [0] * K

    def index(self, arm: int, t: int) -> float:
        n = self.counts[arm]
        if n == 0:
            return INF
        return klucb_index(self.sums[arm] / n, n, t, self.c)

    def select(self, t: int) -> int:
        return argmax_ordered([self.index(i, t) for i in range(self.K)], self.order)

    def update(self, arm: int, reward: float, t: int) -> None:
        self.sums[arm] += clip01(reward)
        self.counts[arm] += 1


class SWUCBPolicy(Policy):
    name = "SW-UCB"

    def __init__(self, K: int, params: BaselineParams, rng=None):
        super().__init__(K, rng)
        self.tau = int(params["tau"])
        self.xi = params["xi"]
        self.window = SlidingWindow(K, self.tau)

    def index(self, arm: int, t: int) -> float:
        w = self.window
        if w.counts[arm] == 0:
            return INF
        return swucb_index(w.successes(arm), w.counts[arm], t, self.tau, self.xi)

    def select(self, t: int) -> int:
        return argmax_ordered([self.index(i, t) for i in range(self.K)], self.order)

    def update(self, arm: int, reward: float, t: int) -> None:
        self.window.add(arm, reward)


class SWKLUCBPolicy(Policy):
    name = "SW-KL-UCB"

    def __init__(self, K: int, params: BaselineParams, rng=None):
        super().__init__(K, rng)
        self.tau = int(params["tau"])
        self.c = params["c"]
        self.window = SlidingWindow(K, self.tau)

    def index(self, arm: int, t: int) -> float:
        w = self.window
        if w.counts[arm] == 0:
            return INF
        return swklucb_index(w.mean(arm), w.counts[arm], t, self.tau, self.c)

    def select(self, t: int) -> int:
        return argmax_ordered([self.index(i, t) for i in range(self.K)], self.order)

    def update(self, arm: int, reward: float, t: int) -> None:
        self.window.add(arm, reward)


class SWTSPolicy(Policy):
    name = "SW-TS"

    def __init__(self, K: int, params: BaselineParams, rng=None):
        super().__init__(K, rng)
        self.tau = int(params["tau"])
        self.window = SlidingWindow(K, self.tau)

    def select(self, t: int) -> int:
        w = self.window
        theta = swts_sample([w.successes(i) for i in range(self.K)],
                            [w.failures(i) for i in range(self.K)], self.rng)
        return argmax_ordered(theta, self.order)

    def update(self, arm: int, reward: float, t: int) -> None:
        self.window.add(arm, reward)


class Rexp3Policy(Policy):
    """EXP3 restarted every ``block`` rounds; log-weights avoid overflow inside a block."""

    name = "Rexp3"

    def __init__(self, K: int, params: BaselineParams, rng=None):
        super().__init__(K, rng)
        self.gamma = params["gamma"]
        self.block = int(params["block"])
        self.log_weights = [0.0] * K
        self.probs = [1.0 / K] * K

    def probabilities(self) -> List[float]:
        m = max(self.log_weights)
        w = [math.exp(lw - m) for lw in self.log_weights]
        total = 0.0
        for x in w:
            total += x
        g, K = self.gamma, self.K
        return [(1.0 - g) * x / total + g / K for x in w]

    def select(self, t: int) -> int:
        if (t - 1) % self.block == 0:
            self.log_weights = [0.0] * self.K
        self.probs = self.probabilities()
        u = self.rng.random()
        cum = 0.0
        for i, p in enumerate(self.probs):
            cum += p
            if u < cum:
                return i
        return self.K - 1

    def update(self, arm: int, reward: float, t: int) -> None:
        x = clip01(reward)
        self.log_weights[arm] += self.gamma * (x / self.probs[arm]) / self.K


class Ser4Policy(Policy):
    """Successive elimination over a random round robin, with random resets and exploration."""

    name = "Ser4"

    def __init__(self, K: int, params: BaselineParams, rng=None):
        super().__init__(K, rng)
        self.delta = params["delta"]
        self.explore = params["explore"]
        self.reset_prob = params["reset"]
        self.horizon = params["horizon"]
        self._log_term = math.log(4.0 * K * self.horizon * self.horizon / self.delta)
        self._explored = False
        self.reset()

    def reset(self) -> None:
        self.active = list(range(self.K))
        self.sums = [0.0] * self.K
        self.counts = [0] * self.K
        self.queue: List[int] = []

    def radius(self, m: int) -> float:
        return math.sqrt(self._log_term / (2.0 * m))

    def _shuffle_active(self) -> List[int]:
        q = list(self.active)
        for i in range(len(q) - 1, 0, -1):
            j = int(self.rng.random() * (i + 1))
            q[i], q[j] = q[j], q[i]
        return q

    def select(self, t: int) -> int:
        if self.rng.random() < self.reset_prob:
            self.reset()
        if self.rng.random() < self.explore:
            self._explored = True
            return min(int(self.rng.random() * self.K), self.K - 1)
        self._explored = False
        if not self.queue:
            self.queue = self._shuffle_active()
        return self.queue.pop(0)

    def eliminate(self) -> None:
        m = min(self.counts[i] for i in self.active)
        if m == 0:
            return
        means = {i: self.sums[i] / self.counts[i] for i in self.active}
        best = max(means.values())
        threshold = 2.0 * self.radius(m)
        self.active = [i for i in self.active if best - means[i] < threshold]

    def update(self, arm: int, reward: float, t: int) -> None:
        if self._explored:
            return
        self.sums[arm] += reward
        self.counts[arm] += 1
        if not self.queue:
            self.eliminate()


def make_baseline(algo, K: int, params: BaselineParams, rng: Optional[np.random.Generator] = None) -> Policy:
    cls = {
        Baseline.REXP3: Rexp3Policy,
        Baseline.KLUCB: KLUCBPolicy,
        Baseline.SER4: Ser4Policy,
        Baseline.SWUCB: SWUCBPolicy,
        Baseline.SWKLUCB: SWKLUCBPolicy,
        Baseline.SWTS: SWTSPolicy,
    }[Baseline(algo)]
    return cls(K, params, rng)
