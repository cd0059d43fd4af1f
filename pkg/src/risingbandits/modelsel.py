"""Online learners as rested arms.

Each arm is an online logistic-regression classifier. Pulling an arm draws a
labelled example from that arm's own stream, scores the prediction
(reward 1 if correct, 0 otherwise) and trains the learner on it. Unpulled
learners never change, so the environment is rested: the reward and payoff of
an arm's n-th pull depend only on its first n-1 pulls. That lets the whole
interaction be tabulated per arm up front and replayed by any policy.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .payoff import ConfigurationError

SparseVector = Tuple[np.ndarray, np.ndarray]  # (indices, values)
Features = Union[SparseVector, np.ndarray]


class StreamFormatError(ValueError):
    """A labelled-example file could not be parsed."""


class LearningRate(str, enum.Enum):
    CONSTANT = "constant"
    DECAYING = "decaying"


def _logistic(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


class OnlineLearnerArm:
    """Logistic regression trained one example at a time.

    Args:
        d: feature dimension, fixed for the lifetime of the arm.
        scheme: constant step ``beta`` or decaying step ``beta / k`` at the k-th update.
        beta: base learning rate.
    """

    def __init__(self, d: int, scheme: Union[LearningRate, str] = LearningRate.CONSTANT, beta: float = 0.1):
        if d < 1:
            raise ConfigurationError("dimension must be >= 1")
        if not beta > 0.0:
            raise ConfigurationError("beta must be positive")
        self.d = int(d)
        self.scheme = LearningRate(scheme)
        self.beta = float(beta)
        self.weights = np.zeros(self.d)
        self.updates_seen = 0

    def _dot(self, x: Features) -> float:
        if isinstance(x, tuple):
            idx, val = x
            if idx.size and (idx.max() >= self.d or idx.min() < 0):
                raise ValueError(f"feature index out of range for dimension {self.d}")
            return float(np.dot(self.weights[idx], val))
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise ValueError(f"expected a vector of length {self.d}, got shape {x.shape}")
        return float(np.dot(self.weights, x))

    def predict(self, x: Features) -> int:
        return 1 if self._dot(x) >= 0.0 else 0

    def step_size(self) -> float:
        """Learning rate for the next update."""
        if self.scheme is LearningRate.CONSTANT:
            return self.beta
        return self.beta / (self.updates_seen + 1)

    def update(self, x: Features, y: int) -> None:
        lam = self.step_size()
        g = lam * (y - _logistic(self._dot(x)))
        if isinstance(x, tuple):
            idx, val = x
            np.add.at(self.weights, idx, g * val)
        else:
            self.weights += g * np.asarray(x, dtype=np.float64)
        self.updates_seen += 1


def olr_predict(arm: OnlineLearnerArm, x: Features) -> int:
    """1 iff ``w . x >= 0`` (a logistic score of exactly one half counts as positive)."""
    return arm.predict(x)


def olr_update(arm: OnlineLearnerArm, x: Features, y: int) -> None:
    arm.update(x, y)


@dataclass(frozen=True)
class LabeledStream:
    """Binary-labelled sparse examples in compressed-row layout."""

    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    labels: np.ndarray
    d: int

    def __post_init__(self):
        if self.labels.size == 0:
            raise ConfigurationError("a labelled stream needs at least one example")
        if self.indices.size and (self.indices.max() >= self.d or self.indices.min() < 0):
            raise ConfigurationError(f"feature indices must lie in [0, {self.d})")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise ConfigurationError("labels must be 0 or 1")

    def __len__(self) -> int:
        return int(self.labels.size)

    def example(self, i: int) -> Tuple[SparseVector, int]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return (self.indices[lo:hi], self.values[lo:hi]), int(self.labels[i])

    def draw(self, rng: np.random.Generator) -> Tuple[SparseVector, int]:
        """Uniform draw with replacement."""
        return self.example(int(rng.integers(len(self))))

    def dense(self) -> np.ndarray:
        X = np.zeros((len(self), self.d))
        rows = np.repeat(np.arange(len(self)), np.diff(self.indptr))
        X[rows, self.indices] = self.values
        return X

    @classmethod
    def from_dense(cls, X: np.ndarray, y: np.ndarray) -> "LabeledStream":
        X = np.asarray(X, dtype=np.float64)
        mask = X != 0.0
        indptr = np.concatenate([[0], np.cumsum(mask.sum(axis=1))]).astype(np.int64)
        rows, cols = np.nonzero(mask)
        return cls(indptr, cols.astype(np.int64), X[rows, cols], np.asarray(y, dtype=np.int64), X.shape[1])


def load_stream(path: Union[str, Path], d: int) -> LabeledStream:
    """Read ``label idx:val ...`` lines (UTF-8, ``#`` comment lines skipped).

    Raises:
        StreamFormatError: malformed line, label outside {0, 1}, index outside
            ``[0, d)``, or no examples at all. Messages name the line number.
    """
    indptr, indices, values, labels = [0], [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            try:
                label = int(fields[0])
            except ValueError:
                raise StreamFormatError(f"line {lineno}: label {fields[0]!r} is not an integer") from None
            if label not in (0, 1):
                raise StreamFormatError(f"line {lineno}: label must be 0 or 1, got {label}")
            for tok in fields[1:]:
                key, sep, val = tok.partition(":")
                if not sep:
                    raise StreamFormatError(f"line {lineno}: expected idx:val, got {tok!r}")
                try:
                    idx, v = int(key), float(val)
                except ValueError:
                    raise StreamFormatError(f"line {lineno}: cannot parse {tok!r}") from None
                if not 0 <= idx < d:
                    raise StreamFormatError(f"line {lineno}: feature index {idx} outside [0, {d})")
                indices.append(idx)
                values.append(v)
            labels.append(label)
            indptr.append(len(indices))
    if not labels:
        raise StreamFormatError(f"{path}: no examples")
    return LabeledStream(np.asarray(indptr, dtype=np.int64), np.asarray(indices, dtype=np.int64),
                         np.asarray(values, dtype=np.float64), np.asarray(labels, dtype=np.int64), int(d))


def separable_blobs(n: int, d: int = 10, margin: float = 1.0, seed=0) -> LabeledStream:
    """Two Gaussian blobs split by a hyperplane through the origin.

    The coordinate along a random unit direction is ``+-(margin/2 + |z|)``; the
    orthogonal part is standard normal, so the classes are separated by a gap
    of exactly ``margin`` around the hyperplane.
    """
    if n < 1 or d < 1:
        raise ConfigurationError("need n >= 1 and d >= 1")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    u = rng.standard_normal(d)
    u /= np.linalg.norm(u)
    y = rng.integers(0, 2, size=n)
    X = rng.standard_normal((n, d))
    X -= np.outer(X @ u, u)
    along = margin / 2 + np.abs(rng.standard_normal(n))
    X += np.outer(np.where(y == 1, along, -along), u)
    return LabeledStream.from_dense(X, y)


def split_stream(stream: LabeledStream, n_first: int) -> Tuple[LabeledStream, LabeledStream]:
    """First ``n_first`` examples and the rest, e.g. a training stream and a held-out set."""
    if not 0 < n_first < len(stream):
        raise ConfigurationError(f"split point must lie in (0, {len(stream)})")
    cut = stream.indptr[n_first]
    head = LabeledStream(stream.indptr[: n_first + 1].copy(), stream.indices[:cut], stream.values[:cut],
                         stream.labels[:n_first], stream.d)
    tail = LabeledStream(stream.indptr[n_first:] - cut, stream.indices[cut:], stream.values[cut:],
                         stream.labels[n_first:], stream.d)
    return head, tail


@dataclass(frozen=True)
class LearnerSpec:
    scheme: LearningRate = LearningRate.CONSTANT
    beta: float = 0.1

    @classmethod
    def parse(cls, item) -> "LearnerSpec":
        if isinstance(item, LearnerSpec):
            return item
        if isinstance(item, str):
            return cls(LearningRate(item))
        return cls(LearningRate(item.get("scheme", "constant")), float(item.get("beta", 0.1)))

    def build(self, d: int) -> OnlineLearnerArm:
        return OnlineLearnerArm(d, self.scheme, self.beta)

    def to_dict(self) -> dict:
        return {"scheme": self.scheme.value, "beta": self.beta}


def _arm_rng(seed, arm: int) -> np.random.Generator:
    entropy = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([*entropy, 2, arm])))


class LearnerEnv:
    """Rested environment whose arms are online learners.

    Each arm draws from the shared immutable stream with its own generator.
    The payoff of an arm before a pull is the accuracy of its current weights
    on ``eval_set`` (the training stream when omitted).
    """

    def __init__(self, learners: Sequence[LearnerSpec], stream: LabeledStream, seed=0,
                 eval_set: Optional[LabeledStream] = None):
        if len(stream) == 0:
            raise ConfigurationError("empty stream")
        self.specs = [LearnerSpec.parse(s) for s in learners]
        if not self.specs:
            raise ConfigurationError("need at least one learner")
        self.stream = stream
        self.eval_set = eval_set if eval_set is not None else stream
        self.arms = [s.build(stream.d) for s in self.specs]
        self.rngs = [_arm_rng(seed, i) for i in range(len(self.arms))]
        self._eval_X = self.eval_set.dense()
        self._eval_y = self.eval_set.labels
        self.t = 0

    @property
    def K(self) -> int:
        return len(self.arms)

    def accuracy(self, arm: int) -> float:
        pred = (self._eval_X @ self.arms[arm].weights >= 0.0).astype(np.int64)
        return float(np.mean(pred == self._eval_y))

    def pull(self, arm: int) -> Tuple[int, float]:
        """Serve one pull of ``arm``: ``(reward, payoff before the pull)``."""
        if not 0 <= arm < self.K:
            raise IndexError(f"arm {arm} out of range for K={self.K}")
        payoff = self.accuracy(arm)
        x, y = self.stream.draw(self.rngs[arm])
        learner = self.arms[arm]
        reward = 1 - abs(y - learner.predict(x))
        learner.update(x, y)
        return reward, payoff


def learner_arm_pull(env: LearnerEnv, arm: int, t: int) -> int:
    """Reward of pulling ``arm`` at round ``t``; only that learner is trained."""
    if t != env.t + 1:
        raise ValueError(f"expected round {env.t + 1}, got {t}")
    env.t = t
    return env.pull(arm)[0]


def learner_tables(learners: Sequence[LearnerSpec], stream: LabeledStream, T: int, seed=0,
                   eval_set: Optional[LabeledStream] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Per-arm reward and payoff of the first ``T`` pulls, each learner run alone.

    Because the environment is rested these tables fully determine any policy's
    interaction: row ``i``, column ``n`` is the outcome of arm ``i``'s (n+1)-th pull.
    """
    env = LearnerEnv(learners, stream, seed, eval_set)
    rewards = np.empty((env.K, T))
    payoffs = np.empty((env.K, T))
    for i in range(env.K):
        for n in range(T):
            rewards[i, n], payoffs[i, n] = env.pull(i)
    return rewards, payoffs


def standalone_accuracy(payoffs: np.ndarray) -> np.ndarray:
    """Accuracy of each learner just before its last tabulated pull."""
    return payoffs[:, -1].copy()


__all__ = [
    "LabeledStream", "LearnerEnv", "LearnerSpec", "LearningRate", "OnlineLearnerArm",
    "StreamFormatError", "learner_arm_pull", "learner_tables", "load_stream", "olr_predict",
    "olr_update", "separable_blobs", "split_stream", "standalone_accuracy",
]
