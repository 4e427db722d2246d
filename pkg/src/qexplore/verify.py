"""Ground-truth scoring of solver outputs and PAC failure-rate checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from scipy import stats

from qexplore.algorithms import ProblemSpec, QuantileResult
from qexplore.env import GroundTruth

__all__ = [
    "TrialVerdict",
    "FailureRate",
    "score",
    "failure_rate",
    "wilson_interval",
    "within_pac",
    "sign_test",
    "brute_force_cdf",
    "brute_force_lambda_m",
]

MODES = ("threshold", "quantile", "top_m")
_DEFAULT_MODE = {"Q-IK": "threshold", "Q-IU": "quantile", "Q-FK": "threshold", "Q-FU": "top_m"}


@dataclass(frozen=True)
class TrialVerdict:
    """``success`` iff no duplicate arms and every margin is >= 0."""

    success: bool
    margins: tuple[float, ...]
    samples: int
    duplicates: bool = False


def score(result: QuantileResult, truth: GroundTruth, spec: ProblemSpec,
          mode: str | None = None) -> TrialVerdict:
    """Score returned arms against true means.

    ``mode`` picks the bar each arm must clear:

    * ``"threshold"``: mean >= lam - eps (guarantee of the known-threshold solvers)
    * ``"quantile"``: mean >= lambda_rho - eps ([eps, rho]-optimality)
    * ``"top_m"``: mean + eps >= lambda_[m] ((eps, m)-optimality)

    The default follows each problem's stated guarantee.
    """
    mode = mode or _DEFAULT_MODE[spec.variant]
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    means = [truth.mean_of(a) for a in result.arms]
    if mode == "threshold":
        if spec.lam is None:
            raise ValueError("threshold scoring needs spec.lam")
        bar = spec.lam - spec.eps
        margins = tuple(mu - bar for mu in means)
    elif mode == "quantile":
        bar = truth.lambda_rho(spec.rho if spec.rho is not None else spec.m / spec.n)
        margins = tuple(mu - (bar - spec.eps) for mu in means)
    else:
        top = truth.lambda_m(spec.m)
        margins = tuple((mu + spec.eps) - top for mu in means)

    if spec.finite:
        keys = [a.base_index for a in result.arms]
    else:
        keys = [a.id for a in result.arms]
    duplicates = len(set(keys)) != len(keys)
    success = not duplicates and all(x >= 0 for x in margins)
    return TrialVerdict(success, margins, result.total_samples, duplicates)


# ---------------------------------------------------------------------------
# failure rates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FailureRate:
    failures: int
    trials: int
    rate: float
    low: float
    high: float
    passed: bool


def wilson_interval(failures: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    p = failures / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials**2)) / denom
    low = 0.0 if failures == 0 else max(0.0, center - half)
    high = 1.0 if failures == trials else min(1.0, center + half)
    return low, high


def failure_rate(verdicts: Sequence[TrialVerdict] | Iterable[bool], delta: float,
                 confidence: float = 0.95) -> FailureRate:
    """Empirical failure rate with a Wilson interval.

    Passes unless the whole interval lies above ``delta``, i.e. unless the
    data reject the PAC claim.
    """
    outcomes = [v.success if isinstance(v, TrialVerdict) else bool(v) for v in verdicts]
    if len(outcomes) < 30:
        raise ValueError(f"need at least 30 trials, got {len(outcomes)}")
    n = len(outcomes)
    fails = n - sum(outcomes)
    low, high = wilson_interval(fails, n, confidence)
    return FailureRate(fails, n, fails / n, low, high, low <= delta)


def within_pac(failures: int, trials: int, delta: float, sigmas: float = 3.0) -> bool:
    """``failures/trials <= delta + sigmas * sqrt(delta (1 - delta) / trials)``."""
    return failures / trials <= delta + sigmas * math.sqrt(delta * (1.0 - delta) / trials)


def sign_test(smaller: Sequence[float], larger: Sequence[float]) -> float:
    """One-sided paired sign test p-value for ``smaller < larger``; ties dropped."""
    if len(smaller) != len(larger):
        raise ValueError("paired samples must have equal length")
    wins = sum(a < b for a, b in zip(smaller, larger))
    losses = sum(a > b for a, b in zip(smaller, larger))
    if wins + losses == 0:
        return 1.0
    return float(stats.binomtest(wins, wins + losses, 0.5, alternative="greater").pvalue)


# ---------------------------------------------------------------------------
# brute-force references
# ---------------------------------------------------------------------------


def brute_force_cdf(support: Iterable[tuple[float, float]], x: float) -> float:
    """P{X <= x} for a weighted atom list, by direct summation."""
    support = list(support)
    total = math.fsum(w for _, w in support)
    return math.fsum(w for v, w in support if v <= x) / total


def brute_force_lambda_m(means: Sequence[float], m: int) -> float:
    """The m-th largest value: some v with #{>v} < m <= #{>=v}."""
    for v in means:
        above = sum(mu > v for mu in means)
        at_least = sum(mu >= v for mu in means)
        if above < m <= at_least:
            return v
    raise ValueError(f"rank {m} out of range")
