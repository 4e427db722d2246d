"""Arm-selection building blocks: Median-Elimination, Halving, PACMaxing, LambdaEstimation.

All routines sample exclusively through the :class:`~qexplore.env.ArmSource`
they are given and report the number of samples they drew.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from qexplore import kernels
from qexplore.confidence import ConfidenceBound
from qexplore.env import Arm, ArmSource, Complement

__all__ = [
    "Selection",
    "PacMaxResult",
    "LambdaEstimate",
    "median_elimination",
    "median_elimination_cost",
    "halving",
    "halving_worst",
    "pac_maxing",
    "pac_budget",
    "lambda_estimation",
    "DEFAULT_GAMMA",
    "DEFAULT_K1",
]

DEFAULT_GAMMA = 2.0
DEFAULT_K1 = 4.0

_UNIFORM_BLOCK = 2048


@dataclass
class Selection:
    arms: list[Arm]
    samples: int

    @property
    def arm(self) -> Arm:
        return self.arms[0]


@dataclass
class PacMaxResult:
    arm: Arm
    exhausted: bool
    samples: int
    trace: list[tuple[int, int, int, float]] | None = field(default=None, repr=False)


@dataclass
class LambdaEstimate:
    value: float
    samples_used: int


def _top(means: Sequence[float], keep: int) -> list[int]:
    """Indices of the ``keep`` largest means, ties to the lower index, in input order."""
    order = sorted(range(len(means)), key=lambda i: -means[i])
    return sorted(order[:keep])


# ---------------------------------------------------------------------------
# Median-Elimination
# ---------------------------------------------------------------------------


def _me_rounds(n: int, eps: float, delta: float):
    eps_l, delta_l = eps / 4.0, delta / 2.0
    while n > 1:
        yield n, math.ceil(4.0 / eps_l**2 * math.log(3.0 / delta_l))
        n = math.ceil(n / 2)
        eps_l *= 0.75
        delta_l /= 2.0


def median_elimination_cost(n: int, eps: float, delta: float) -> int:
    """Exact number of samples :func:`median_elimination` draws on ``n`` arms."""
    return sum(size * times for size, times in _me_rounds(n, eps, delta))


def median_elimination(arms: Sequence[Arm], eps: float, delta: float, src: ArmSource) -> Selection:
    """Return an arm within ``eps`` of the best mean with probability ``1 - delta``.

    Round l samples every survivor ``ceil(4/eps_l^2 log(3/delta_l))`` times and
    keeps the better half, with eps_1 = eps/4, delta_1 = delta/2 shrinking
    by 3/4 and 1/2 per round.  The sample count is deterministic given
    ``len(arms)``; see :func:`median_elimination_cost`.
    """
    if not arms:
        raise ValueError("median_elimination needs at least one arm")
    survivors = list(arms)
    used = 0
    for size, times in _me_rounds(len(survivors), eps, delta):
        means = [src.sample_sum(a, times) / times for a in survivors]
        used += size * times
        survivors = [survivors[i] for i in _top(means, math.ceil(size / 2))]
    return Selection(survivors, used)


# ---------------------------------------------------------------------------
# Halving
# ---------------------------------------------------------------------------


def halving(arms: Sequence[Arm], k: int, eps: float, delta: float, src: ArmSource) -> Selection:
    """Return ``k`` distinct arms, each within ``eps`` of the k-th best mean w.p. ``1 - delta``.

    Round r samples every survivor ``ceil(2/eps_r^2 log(2 k |A_r| / delta_r))``
    times, eps_r = (eps/4)(3/4)^(r-1), delta_r = delta/2^r, and keeps the top
    ``max(k, ceil(|A_r|/2))``.
    """
    if not 1 <= k <= len(arms):
        raise ValueError(f"k={k} must lie in 1..{len(arms)}")
    survivors = list(arms)
    used = 0
    r = 1
    while len(survivors) > k:
        eps_r = eps / 4.0 * 0.75 ** (r - 1)
        delta_r = delta / 2.0**r
        size = len(survivors)
        times = math.ceil(2.0 / eps_r**2 * math.log(2.0 * k * size / delta_r))
        means = [src.sample_sum(a, times) / times for a in survivors]
        used += size * times
        survivors = [survivors[i] for i in _top(means, max(k, math.ceil(size / 2)))]
        r += 1
    return Selection(survivors, used)


def halving_worst(arms: Sequence[Arm], eps: float, delta: float, src: ArmSource) -> Selection:
    """Return one arm within ``eps`` of the smallest mean w.p. ``1 - delta``.

    Runs :func:`halving` with k = 1 on reward-complemented handles.
    """
    flipped = [Arm(a.id, Complement(a.dist), a.base_index) for a in arms]
    picked = halving(flipped, 1, eps, delta, src)
    index = flipped.index(picked.arm)
    return Selection([arms[index]], picked.samples)


# ---------------------------------------------------------------------------
# PACMaxing
# ---------------------------------------------------------------------------


def pac_budget(n: int, eps: float, delta: float, gamma: float = DEFAULT_GAMMA,
               k1: float = DEFAULT_K1) -> int:
    """Smallest integer budget meeting PACMaxing's sample-complexity guarantee.

    ``3n + max(8n/eps^2 log(k1 n/delta), 8(1+1/e) gamma n/eps^2 log(4(1+1/e) gamma/eps^2))``
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    c = 1.0 + math.exp(-1.0)
    first = 8.0 * n / eps**2 * math.log(k1 * n / delta)
    second = 8.0 * c * gamma * n / eps**2 * math.log(4.0 * c * gamma / eps**2)
    return math.ceil(3.0 * n + max(first, second))


def pac_maxing(arms: Sequence[Arm], eps: float, delta: float, budget: float, src: ArmSource,
               bound: ConfidenceBound | str = ConfidenceBound.KL, *,
               gamma: float = DEFAULT_GAMMA, k1: float = DEFAULT_K1,
               backend: str | None = None, trace: bool = False) -> PacMaxResult:
    """LUCB-style search for an ``eps``-best arm under a hard sample budget.

    Samples every arm once, then repeatedly samples the empirical leader
    ``a`` and the highest-upper-bound challenger ``b`` until
    ``U(b) - L(a) <= eps``.  A new pair is drawn only while ``t + 2 <= budget``;
    if the stopping rule never fires, a uniformly random arm is returned with
    ``exhausted=True``.  Bounds at count ``s`` use error level
    ``delta / (k1 n s^gamma)``.

    ``trace=True`` records ``(t, a, b, B)`` per loop iteration and forces the
    Python kernel.
    """
    bound = ConfidenceBound.parse(bound)
    n = len(arms)
    if n < 1:
        raise ValueError("pac_maxing needs at least one arm")
    if budget < n:
        raise ValueError(f"budget {budget} cannot cover one sample of each of {n} arms")
    if n == 1:
        src.sample_sum(arms[0], 1)
        return PacMaxResult(arms[0], False, 1, [] if trace else None)

    codes = [a.dist.kernel_code() for a in arms]
    if any(c is None for c in codes):
        raise TypeError("pac_maxing needs reward laws with a kernel code")
    kernel = kernels.get("python" if trace else backend)
    kinds = np.array([c[0] for c in codes], dtype=np.int32)
    params = np.array([c[1] for c in codes], dtype=np.float64)
    sums = np.zeros(n)
    counts = np.zeros(n, dtype=np.int64)
    upper = np.zeros(n)
    lower = np.zeros(n)
    records: list | None = [] if trace else None

    block = max(_UNIFORM_BLOCK, 2 * n)
    uniforms = src.uniforms(block)
    pos, t, a, b, gap = 0, 0, 0, 1, math.inf
    while True:
        status, pos, t, a, b, gap = kernel.lucb_run(
            sums, counts, kinds, params, upper, lower, uniforms, pos, t, float(budget),
            a, b, gap, eps, delta, gamma, k1, bound.code, records,
        )
        if status == kernels.DONE:
            break
        uniforms = src.uniforms(block)
        pos = 0
    src.charge(t)
    if gap <= eps:
        return PacMaxResult(arms[a], False, t, records)
    return PacMaxResult(arms[src.random_index(n)], True, t, records)


# ---------------------------------------------------------------------------
# LambdaEstimation
# ---------------------------------------------------------------------------


def lambda_estimation(src: ArmSource, rho: float, eps: float, delta: float,
                      eps_split: tuple[float, float, float] | None = None) -> LambdaEstimate:
    """Estimate the top-rho threshold of an infinite arm source.

    With probability ``1 - delta`` the estimate lies in
    ``[lambda_rho - eps, lambda_{rho/2}]``.  ``eps_split`` gives
    ``(eps1, eps2, eps3)`` with ``eps1 + eps2 + 2 eps3 = eps``; default eps/4 each.
    """
    for name, v in (("rho", rho), ("eps", eps), ("delta", delta)):
        if not 0.0 < v <= 0.5:
            raise ValueError(f"{name} must lie in (0, 1/2], got {v}")
    if eps_split is None:
        eps1 = eps2 = eps3 = eps / 4.0
    else:
        eps1, eps2, eps3 = eps_split
        if not math.isclose(eps1 + eps2 + 2.0 * eps3, eps, rel_tol=1e-9):
            raise ValueError("eps split must satisfy eps1 + eps2 + 2 eps3 = eps")
    n3 = math.ceil(32.0 / rho * math.log(5.0 / delta))
    n4 = math.ceil(1.0 / (2.0 * eps3**2) * math.log(10.0 / delta))
    m = math.floor(1.0 + 0.75 * rho * n3)

    pool = src.draw_arms(n3)
    top = halving(pool, m, eps1, delta / 5.0, src)
    worst = halving_worst(top.arms, eps2, delta / 5.0, src)
    mu0 = src.sample_sum(worst.arm, n4) / n4
    return LambdaEstimate(mu0 - eps2 - eps3, top.samples + worst.samples + n4)
