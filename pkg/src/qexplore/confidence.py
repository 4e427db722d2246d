"""Upper/lower confidence bounds for [0, 1] rewards and the per-count error schedule.

The compiled LUCB kernel re-implements ``hoeffding_*`` and ``kl_*`` with the
same floating-point operations in the same order; keep the two in sync.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

__all__ = [
    "ConfidenceBound",
    "BoundSchedule",
    "hoeffding_upper",
    "hoeffding_lower",
    "kl_bernoulli",
    "kl_upper",
    "kl_lower",
    "schedule_delta",
    "KL_TOL",
    "KL_MAX_ITER",
]

# bisection stops once the bracket is this small relative to the distance
# from the clamp endpoint; the divergence is steep near 0 and 1
KL_TOL = 1e-12
KL_MAX_ITER = 64


def _check(n: int, delta: float) -> None:
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def hoeffding_upper(mean: float, n: int, delta: float) -> float:
    _check(n, delta)
    return min(1.0, mean + math.sqrt(math.log(1.0 / delta) / (2.0 * n)))


def hoeffding_lower(mean: float, n: int, delta: float) -> float:
    _check(n, delta)
    return max(0.0, mean - math.sqrt(math.log(1.0 / delta) / (2.0 * n)))


def kl_bernoulli(p: float, q: float) -> float:
    """Bernoulli relative entropy d(p || q), with 0 log 0 = 0."""
    if q <= 0.0:
        return 0.0 if p <= 0.0 else math.inf
    if q >= 1.0:
        return 0.0 if p >= 1.0 else math.inf
    d = 0.0
    if p > 0.0:
        d += p * math.log(p / q)
    if p < 1.0:
        d += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return d


def kl_upper(mean: float, n: int, delta: float) -> float:
    """Largest q in [mean, 1] with ``n * d(mean || q) <= log(1/delta)``, by bisection."""
    _check(n, delta)
    mean = min(1.0, max(0.0, mean))
    if mean >= 1.0:
        return 1.0
    level = math.log(1.0 / delta)
    lo, hi = mean, 1.0
    for _ in range(KL_MAX_ITER):
        if hi - lo <= KL_TOL * (1.0 - hi):
            break
        mid = 0.5 * (lo + hi)
        if n * kl_bernoulli(mean, mid) <= level:
            lo = mid
        else:
            hi = mid
    return lo


def kl_lower(mean: float, n: int, delta: float) -> float:
    """Smallest q in [0, mean] with ``n * d(mean || q) <= log(1/delta)``."""
    _check(n, delta)
    mean = min(1.0, max(0.0, mean))
    if mean <= 0.0:
        return 0.0
    level = math.log(1.0 / delta)
    lo, hi = 0.0, mean
    for _ in range(KL_MAX_ITER):
        if hi - lo <= KL_TOL * lo:
            break
        mid = 0.5 * (lo + hi)
        if n * kl_bernoulli(mean, mid) <= level:
            hi = mid
        else:
            lo = mid
    return hi


class ConfidenceBound(enum.Enum):
    HOEFFDING = "hoeffding"
    KL = "kl"

    @property
    def code(self) -> int:
        return 0 if self is ConfidenceBound.HOEFFDING else 1

    def upper(self, mean: float, n: int, delta: float) -> float:
        if self is ConfidenceBound.HOEFFDING:
            return hoeffding_upper(mean, n, delta)
        return kl_upper(mean, n, delta)

    def lower(self, mean: float, n: int, delta: float) -> float:
        if self is ConfidenceBound.HOEFFDING:
            return hoeffding_lower(mean, n, delta)
        return kl_lower(mean, n, delta)

    @classmethod
    def parse(cls, name: "str | ConfidenceBound") -> "ConfidenceBound":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown bound kind {name!r}; expected 'hoeffding' or 'kl'") from None


@dataclass(frozen=True)
class BoundSchedule:
    """Per-count error levels ``delta / (k1 * n * s**gamma)``.

    With ``k1 >= 2 (1 + 1/(gamma - 1))`` the levels summed over every count
    and both bound sides of all ``n`` arms stay below ``delta``.
    """

    delta: float
    n: int
    gamma: float = 2.0
    k1: float = 4.0

    def __post_init__(self):
        if self.gamma <= 1.0:
            raise ValueError("gamma must exceed 1")
        if self.k1 < 2.0 * (1.0 + 1.0 / (self.gamma - 1.0)) - 1e-12:
            raise ValueError("k1 must be at least 2 (1 + 1/(gamma - 1))")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    def at(self, s: int) -> float:
        if s < 1:
            raise ValueError("s must be >= 1")
        return self.delta / (self.k1 * self.n * float(s) ** self.gamma)


def schedule_delta(sched: BoundSchedule, s: int) -> float:
    return sched.at(s)
