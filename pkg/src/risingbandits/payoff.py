"""Parametric payoff curves, their increments and the cumulative-increment functional."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

RISING_TOL = 1e-12


class ConfigurationError(ValueError):
    """Raised when a curve, environment or experiment is configured with invalid values."""


class CurveKind(str, enum.Enum):
    EXPONENTIAL = "exponential"
    POLYNOMIAL = "polynomial"
    CONSTANT = "constant"
    STEP = "step"
    PIECEWISE_LINEAR_CAP = "piecewise_linear_cap"
    TABULATED = "tabulated"


_PARAM_NAMES = {
    CurveKind.EXPONENTIAL: ("c", "a"),
    CurveKind.POLYNOMIAL: ("c", "b", "rho"),
    CurveKind.CONSTANT: ("level",),
    CurveKind.STEP: ("before", "after", "threshold"),
    CurveKind.PIECEWISE_LINEAR_CAP: ("slope", "cap"),
    CurveKind.TABULATED: ("values",),
}


def _in_unit(x: float) -> bool:
    return 0.0 <= x <= 1.0


@dataclass(frozen=True)
class PayoffCurve:
    """Expected payoff as a function of a positive integer argument.

    The argument is the pull count for rested arms and the round for restless
    arms. Instances are immutable; build them through the classmethods.
    """

    kind: CurveKind
    params: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "kind", CurveKind(self.kind))
        names = _PARAM_NAMES[self.kind]
        if len(self.params) != len(names):
            raise ConfigurationError(f"{self.kind.value} expects params {names}, got {self.params!r}")
        k, p = self.kind, self.params
        if k is CurveKind.EXPONENTIAL:
            c, a = p
            if not (0.0 < c <= 1.0 and 0.0 < a <= 1.0):
                raise ConfigurationError(f"exponential needs c, a in (0, 1], got c={c}, a={a}")
        elif k is CurveKind.POLYNOMIAL:
            c, b, rho = p
            if not (0.0 < c <= 1.0 and b >= 0.0 and 0.0 < rho <= 1.0):
                raise ConfigurationError(f"polynomial needs c, rho in (0, 1] and b >= 0, got {p}")
        elif k is CurveKind.CONSTANT:
            if not _in_unit(p[0]):
                raise ConfigurationError(f"constant level must lie in [0, 1], got {p[0]}")
        elif k is CurveKind.STEP:
            before, after, threshold = p
            if not (_in_unit(before) and _in_unit(after)):
                raise ConfigurationError(f"step levels must lie in [0, 1], got {before}, {after}")
            if int(threshold) != threshold or threshold < 0:
                raise ConfigurationError(f"step threshold must be a non-negative integer, got {threshold}")
        elif k is CurveKind.PIECEWISE_LINEAR_CAP:
            slope, cap = p
            if slope < 0.0 or not _in_unit(cap):
                raise ConfigurationError(f"piecewise-linear cap needs slope >= 0 and cap in [0, 1], got {p}")
        elif k is CurveKind.TABULATED:
            values = p[0]
            if len(values) == 0 or not all(math.isfinite(v) for v in values):
                raise ConfigurationError("tabulated curve needs a non-empty list of finite values")

    # -- constructors -----------------------------------------------------

    @classmethod
    def exponential(cls, c: float, a: float) -> "PayoffCurve":
        return cls(CurveKind.EXPONENTIAL, (float(c), float(a)))

    @classmethod
    def polynomial(cls, c: float, b: float, rho: float) -> "PayoffCurve":
        return cls(CurveKind.POLYNOMIAL, (float(c), float(b), float(rho)))

    @classmethod
    def constant(cls, level: float) -> "PayoffCurve":
        return cls(CurveKind.CONSTANT, (float(level),))

    @classmethod
    def step(cls, before: float, after: float, threshold: int) -> "PayoffCurve":
        return cls(CurveKind.STEP, (float(before), float(after), int(threshold)))

    @classmethod
    def piecewise_linear_cap(cls, slope: float, cap: float) -> "PayoffCurve":
        return cls(CurveKind.PIECEWISE_LINEAR_CAP, (float(slope), float(cap)))

    @classmethod
    def tabulated(cls, values: Iterable[float]) -> "PayoffCurve":
        return cls(CurveKind.TABULATED, (tuple(float(v) for v in values),))

    @classmethod
    def from_increments(cls, increments: Iterable[float], start: float = 0.0) -> "PayoffCurve":
        """Tabulated curve with ``mu(1) = start`` and ``mu(l+1) - mu(l) = increments[l-1]``."""
        values = np.concatenate([[start], start + np.cumsum(np.asarray(list(increments), dtype=float))])
        return cls.tabulated(values)

    # -- evaluation -------------------------------------------------------

    def values(self, n) -> np.ndarray:
        """Vectorised evaluation at positive integers ``n``."""
        n = np.asarray(n, dtype=float)
        k, p = self.kind, self.params
        if k is CurveKind.EXPONENTIAL:
            c, a = p
            return -c * np.expm1(-a * n)
        if k is CurveKind.POLYNOMIAL:
            c, b, rho = p
            if b == 0.0:
                return np.full(n.shape, c)
            # c(1 - b (n + b^{1/rho})^{-rho}) rewritten as c(1 - (1 + n b^{-1/rho})^{-rho}),
            # with log(1 + n b^{-1/rho}) taken in log space so small rho cannot overflow
            log_scale = -math.log(b) / rho
            return -c * np.expm1(-rho * np.logaddexp(0.0, np.log(n) + log_scale))
        if k is CurveKind.CONSTANT:
            return np.full(n.shape, p[0])
        if k is CurveKind.STEP:
            before, after, threshold = p
            return np.where(n <= threshold, before, after)
        if k is CurveKind.PIECEWISE_LINEAR_CAP:
            slope, cap = p
            return np.minimum(slope * n, cap)
        table = np.asarray(p[0], dtype=float)
        idx = np.minimum(n.astype(np.int64), len(table)) - 1
        return table[idx]

    def table(self, horizon: int) -> np.ndarray:
        """Payoffs at ``1..horizon``."""
        return self.values(np.arange(1, horizon + 1))

    def to_dict(self) -> dict:
        names = _PARAM_NAMES[self.kind]
        out = {"kind": self.kind.value}
        for name, value in zip(names, self.params):
            out[name] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "PayoffCurve":
        kind = CurveKind(d["kind"])
        try:
            params = tuple(d[name] for name in _PARAM_NAMES[kind])
        except KeyError as exc:
            raise ConfigurationError(f"{kind.value} curve is missing parameter {exc}") from None
        if kind is CurveKind.TABULATED:
            return cls.tabulated(params[0])
        if kind is CurveKind.STEP:
            return cls.step(*params)
        return cls(kind, tuple(float(v) for v in params))


def eval_payoff(curve: PayoffCurve, n: int) -> float:
    if n < 1:
        raise ValueError(f"payoff argument must be >= 1, got {n}")
    return float(curve.values(np.array([n]))[0])


def increment(curve: PayoffCurve, n: int) -> float:
    """``mu(n+1) - mu(n)``."""
    if n < 1:
        raise ValueError(f"increment argument must be >= 1, got {n}")
    v = curve.values(np.array([n, n + 1]))
    return float(v[1]) - float(v[0])


def increments(curve: PayoffCurve, upto: int) -> np.ndarray:
    """Increments ``gamma(1..upto)``."""
    v = curve.values(np.arange(1, upto + 2))
    return v[1:] - v[:-1]


@dataclass(frozen=True)
class RisingReport:
    nondecreasing: bool
    concave: bool
    first_monotonicity_violation: Optional[int] = None
    first_concavity_violation: Optional[int] = None


def check_rising(curve: PayoffCurve, horizon: int, tol: float = RISING_TOL) -> RisingReport:
    """Scan ``n = 1..horizon-1`` for violations of monotonicity and concavity."""
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    gam = increments(curve, horizon)  # gamma(1..horizon)
    bad_mono = np.flatnonzero(gam[: horizon - 1] < -tol)
    bad_conc = np.flatnonzero(gam[1:horizon] - gam[: horizon - 1] > tol)
    mono = int(bad_mono[0]) + 1 if bad_mono.size else None
    conc = int(bad_conc[0]) + 1 if bad_conc.size else None
    return RisingReport(mono is None, conc is None, mono, conc)


def cumulative_increment(curves: Sequence[PayoffCurve], M: int, q: float) -> float:
    """Sum over ``l < M`` of the largest ``gamma_i(l) ** q``, with ``0 ** 0 = 1``."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    if M == 1:
        return 0.0
    gam = np.vstack([increments(c, M - 1) for c in curves])
    if np.any(gam < 0.0):
        raise ValueError("negative increment: the q-th power is undefined")
    # numpy already evaluates 0.0 ** 0.0 as 1.0
    return float(np.sum(np.max(gam ** q, axis=0)))


class DecayKind(str, enum.Enum):
    EXP = "exp"
    POWER = "power"


def upsilon_bound(decay: str, c: float, q: float, M: int, scale: float = 1.0) -> float:
    """Upper bound on the cumulative increment when every ``gamma_i(l) <= scale * f(l)``.

    ``decay="exp"`` uses ``f(l) = exp(-c l)`` and ``decay="power"`` uses ``f(l) = l ** -c``.
    """
    decay = DecayKind(decay)
    if c <= 0:
        raise ValueError("decay rate must be positive")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    cq = c * q
    factor = scale ** q
    if decay is DecayKind.EXP:
        if q == 0.0:
            return float(M)
        return factor * (math.exp(-cq) + math.exp(-cq) / cq)
    if math.isclose(cq, 1.0, rel_tol=0.0, abs_tol=1e-12):
        return factor * (1.0 + math.log(M))
    if cq > 1.0:
        return factor * (1.0 + 1.0 / (cq - 1.0))
    return factor * (1.0 + M ** (1.0 - cq) / (1.0 - cq))
