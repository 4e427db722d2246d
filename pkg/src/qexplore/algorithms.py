"""Quantile-exploration solvers for known/unknown thresholds, infinite/finite arm sets.

=============  ==========================  ===========================
problem        threshold known             threshold unknown
=============  ==========================  ===========================
infinite set   :func:`al_q_ik`,            :func:`al_q_iu`
               :func:`cb_al_q_ik`
finite set     :func:`al_q_fk`             :func:`al_q_fu`
=============  ==========================  ===========================

:func:`iur_baseline` is the draw-one-and-test baseline the known-threshold
solvers are compared against.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

from qexplore.confidence import ConfidenceBound
from qexplore.env import Arm, ArmSource, Constant
from qexplore.subroutines import lambda_estimation, median_elimination, pac_budget, pac_maxing

__all__ = [
    "QuantileResult",
    "ProblemSpec",
    "al_q_ik",
    "cb_al_q_ik",
    "al_q_iu",
    "al_q_fk",
    "al_q_fu",
    "iur_baseline",
    "ALGORITHMS",
    "solve",
]

VARIANTS = ("Q-IK", "Q-IU", "Q-FK", "Q-FU")


@dataclass
class QuantileResult:
    arms: list[Arm]
    total_samples: int
    phase_breakdown: dict[str, int]
    repetitions: int
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ProblemSpec:
    """One quantile-exploration problem instance (without the arms)."""

    variant: str
    k: int
    eps: float
    delta: float
    rho: float | None = None
    m: int | None = None
    n: int | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 < self.eps < 1.0 or not 0.0 < self.delta < 1.0:
            raise ValueError("eps and delta must lie in (0, 1)")
        known = self.variant in ("Q-IK", "Q-FK")
        if known and self.lam is None:
            raise ValueError(f"{self.variant} needs a threshold lam")
        if not known and self.lam is not None:
            raise ValueError(f"{self.variant} must not be given a threshold")
        if self.finite:
            if self.m is None or self.n is None:
                raise ValueError(f"{self.variant} needs m and n")
            _check_finite(self.variant, self.k, self.m, self.n)
        elif self.rho is None or not 0.0 < self.rho < 1.0:
            raise ValueError(f"{self.variant} needs rho in (0, 1)")

    @property
    def finite(self) -> bool:
        return self.variant in ("Q-FK", "Q-FU")


def _check_finite(variant: str, k: int, m: int, n: int) -> None:
    if not k <= m <= n / 2:
        raise ValueError(f"{variant} requires k <= m <= n/2, got k={k}, m={m}, n={n}")
    if variant == "Q-FU" and not 2 * k < m:
        raise ValueError(f"Q-FU requires 2k < m, got k={k}, m={m}")


def _check_rep_cap(reps: int, cap: int | None) -> None:
    if cap is not None and reps >= cap:
        raise RuntimeError(f"no answer after {reps} repetitions")


# ---------------------------------------------------------------------------
# known threshold, infinite arms
# ---------------------------------------------------------------------------


def al_q_ik(src: ArmSource, k: int, rho: float, eps: float, delta: float, lam: float, *,
            eps1: float | None = None, max_repetitions: int | None = None) -> QuantileResult:
    """Find ``k`` distinct arms with mean at least ``lam - eps`` w.p. ``1 - delta``.

    ``lam`` must not exceed the top-rho quantile of the source.  Each
    repetition draws ceil(log(3)/rho) arms, keeps the Median-Elimination
    winner and accepts it if ``n2`` fresh samples average at least
    ``lam - eps1 - eps2``.  ``eps1`` defaults to 0.8 eps and ``eps2 = (eps - eps1)/2``.
    """
    eps1 = 0.8 * eps if eps1 is None else eps1
    eps2 = (eps - eps1) / 2.0
    if not 0.0 < eps1 < eps:
        raise ValueError("eps1 must lie in (0, eps)")
    n1 = math.ceil(math.log(3.0) / rho)
    n2 = math.ceil(1.0 / (2.0 * eps2**2) * math.log(k / delta))
    threshold = lam - eps1 - eps2

    ans: list[Arm] = []
    screening = verification = reps = 0
    while len(ans) < k:
        _check_rep_cap(reps, max_repetitions)
        reps += 1
        pool = src.draw_arms(n1)
        best = median_elimination(pool, eps1, 0.25, src)
        screening += best.samples
        mu = src.sample_sum(best.arm, n2) / n2
        verification += n2
        if mu >= threshold:
            ans.append(best.arm)
    phases = {"screening": screening, "verification": verification}
    return QuantileResult(ans, screening + verification, phases, reps,
                          {"n1": n1, "n2": n2, "threshold": threshold})


def cb_al_q_ik(src: ArmSource, k: int, rho: float, eps: float, delta: float, lam: float,
               bound: ConfidenceBound | str = ConfidenceBound.KL, *,
               backend: str | None = None, max_repetitions: int | None = None) -> QuantileResult:
    """Confidence-bound variant of :func:`al_q_ik`; adapts to large mean gaps.

    The repetition winner comes from PACMaxing at tolerance 3 eps/4 and error
    1/4; it is accepted if a second PACMaxing run at tolerance eps/8 and error
    delta/k prefers it over a constant arm paying ``lam - 7 eps/8``.  An
    exhausted budget in either call counts as a rejection.
    """
    bound = ConfidenceBound.parse(bound)
    n1 = math.ceil(math.log(3.0) / rho)
    g0 = pac_budget(n1, 0.75 * eps, 0.25)
    g1 = pac_budget(2, eps / 8.0, delta / k)
    # clamped: a negative bar is beaten by every arm anyway
    reference = src.make_arm(Constant(min(1.0, max(0.0, lam - 7.0 * eps / 8.0))))

    ans: list[Arm] = []
    screening = verification = reps = 0
    while len(ans) < k:
        _check_rep_cap(reps, max_repetitions)
        reps += 1
        pool = src.draw_arms(n1)
        first = pac_maxing(pool, 0.75 * eps, 0.25, g0, src, bound, backend=backend)
        screening += first.samples
        if first.exhausted:
            continue
        duel = pac_maxing([first.arm, reference], eps / 8.0, delta / k, g1, src, bound,
                          backend=backend)
        verification += duel.samples
        if not duel.exhausted and duel.arm == first.arm:
            ans.append(first.arm)
    phases = {"screening": screening, "verification": verification}
    return QuantileResult(ans, screening + verification, phases, reps,
                          {"n1": n1, "g0": g0, "g1": g1})


def iur_baseline(src: ArmSource, k: int, rho: float, eps: float, delta: float, lam: float, *,
                 max_repetitions: int | None = None) -> QuantileResult:
    """Draw one arm at a time, sample it, keep it if its mean clears ``lam - eps/2``.

    Each test uses ``ceil(2/eps^2 log(2k/(delta rho)))`` samples, i.e. error
    ``delta rho / (2k)`` per repetition, covering the ~k/rho repetitions.
    """
    n_test = math.ceil(2.0 / eps**2 * math.log(2.0 * k / (delta * rho)))
    threshold = lam - eps / 2.0
    ans: list[Arm] = []
    reps = 0
    while len(ans) < k:
        _check_rep_cap(reps, max_repetitions)
        reps += 1
        (arm,) = src.draw_arms(1)
        if src.sample_sum(arm, n_test) / n_test >= threshold:
            ans.append(arm)
    total = reps * n_test
    return QuantileResult(ans, total, {"verification": total}, reps, {"n_test": n_test})


# ---------------------------------------------------------------------------
# unknown threshold, infinite arms
# ---------------------------------------------------------------------------


def al_q_iu(src: ArmSource, k: int, rho: float, eps: float, delta: float, *,
            bound: ConfidenceBound | str | None = None,
            max_repetitions: int | None = None) -> QuantileResult:
    """Find ``k`` distinct [eps, rho]-optimal arms without knowing the threshold.

    Estimates the threshold with LambdaEstimation(rho, eps/2, delta/2), then
    runs the known-threshold solver at (rho/2, eps/2, delta/2).  Passing
    ``bound`` swaps in :func:`cb_al_q_ik` for the second phase.
    """
    for name, v in (("rho", rho), ("eps", eps), ("delta", delta)):
        if not 0.0 < v <= 0.5:
            raise ValueError(f"{name} must lie in (0, 1/2], got {v}")
    est = lambda_estimation(src, rho, eps / 2.0, delta / 2.0)
    if bound is None:
        inner = al_q_ik(src, k, rho / 2.0, eps / 2.0, delta / 2.0, est.value,
                        max_repetitions=max_repetitions)
    else:
        inner = cb_al_q_ik(src, k, rho / 2.0, eps / 2.0, delta / 2.0, est.value, bound,
                           max_repetitions=max_repetitions)
    phases = {"estimation": est.samples_used, **inner.phase_breakdown}
    return QuantileResult(inner.arms, est.samples_used + inner.total_samples, phases,
                          inner.repetitions, {"lambda_hat": est.value})


# ---------------------------------------------------------------------------
# finite arm sets
# ---------------------------------------------------------------------------


def al_q_fk(src: ArmSource, m: int, k: int, eps: float, delta: float, lam: float, *,
            bound: ConfidenceBound | str | None = None,
            max_repetitions: int | None = None) -> QuantileResult:
    """Find ``k`` distinct base arms with mean at least ``lam - eps`` (``lam <= lambda_[m]``).

    Solves k one-arm problems on the infinite extension of the arms not yet
    chosen, with rho_t = (m - t + 1)/(n - t + 1) and error delta/k each.
    """
    base = src.arms
    n = len(base)
    _check_finite("Q-FK", k, m, n)
    chosen: list[Arm] = []
    phases: Counter[str] = Counter()
    rhos: list[float] = []
    total = reps = 0
    for _ in range(k):
        view = src.extension_view(exclude=[a.base_index for a in chosen])
        rho_t = (m - len(chosen)) / (n - len(chosen))
        rhos.append(rho_t)
        if bound is None:
            res = al_q_ik(view, 1, rho_t, eps, delta / k, lam, max_repetitions=max_repetitions)
        else:
            res = cb_al_q_ik(view, 1, rho_t, eps, delta / k, lam, bound,
                             max_repetitions=max_repetitions)
        chosen.append(src.base_arms[res.arms[0].base_index])
        phases.update(res.phase_breakdown)
        total += res.total_samples
        reps += res.repetitions
    return QuantileResult(chosen, total, dict(phases), reps, {"rhos": rhos})


def al_q_fu(src: ArmSource, m: int, k: int, eps: float, delta: float, *,
            bound: ConfidenceBound | str | None = None,
            max_repetitions: int | None = None) -> QuantileResult:
    """Find ``k`` distinct (eps, m)-optimal base arms without knowing lambda_[m].

    Estimates the threshold on the infinite extension at rho = m/n, then runs
    :func:`al_q_fk` for rank floor(m/2) at (eps/2, delta/2) with that estimate.
    """
    n = len(src.arms)
    _check_finite("Q-FU", k, m, n)
    est = lambda_estimation(src.extension_view(), m / n, eps / 2.0, delta / 2.0)
    inner = al_q_fk(src, m // 2, k, eps / 2.0, delta / 2.0, est.value, bound=bound,
                    max_repetitions=max_repetitions)
    phases = {"estimation": est.samples_used, **inner.phase_breakdown}
    return QuantileResult(inner.arms, est.samples_used + inner.total_samples, phases,
                          inner.repetitions, {"lambda_hat": est.value, **inner.info})


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _run_ik(src, spec, bound, cap):
    return al_q_ik(src, spec.k, spec.rho, spec.eps, spec.delta, spec.lam, max_repetitions=cap)


def _run_cb(src, spec, bound, cap):
    return cb_al_q_ik(src, spec.k, spec.rho, spec.eps, spec.delta, spec.lam,
                      bound or ConfidenceBound.KL, max_repetitions=cap)


def _run_iur(src, spec, bound, cap):
    return iur_baseline(src, spec.k, spec.rho, spec.eps, spec.delta, spec.lam, max_repetitions=cap)


def _run_iu(src, spec, bound, cap):
    return al_q_iu(src, spec.k, spec.rho, spec.eps, spec.delta, bound=bound, max_repetitions=cap)


def _run_fk(src, spec, bound, cap):
    return al_q_fk(src, spec.m, spec.k, spec.eps, spec.delta, spec.lam, bound=bound,
                   max_repetitions=cap)


def _run_fu(src, spec, bound, cap):
    return al_q_fu(src, spec.m, spec.k, spec.eps, spec.delta, bound=bound, max_repetitions=cap)


# name -> (problem variant, runner)
ALGORITHMS: dict[str, tuple[str, Callable]] = {
    "al_q_ik": ("Q-IK", _run_ik),
    "cb_al_q_ik": ("Q-IK", _run_cb),
    "iur_baseline": ("Q-IK", _run_iur),
    "al_q_iu": ("Q-IU", _run_iu),
    "al_q_fk": ("Q-FK", _run_fk),
    "al_q_fu": ("Q-FU", _run_fu),
}


def solve(algorithm: str, src: ArmSource, spec: ProblemSpec,
          bound: ConfidenceBound | str | None = None,
          max_repetitions: int | None = None) -> QuantileResult:
    """Run ``algorithm`` on ``spec``; ``bound`` selects confidence-bound subroutines."""
    try:
        variant, runner = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}") from None
    if variant != spec.variant:
        raise ValueError(f"{algorithm} solves {variant}, not {spec.variant}")
    bound = None if bound is None else ConfidenceBound.parse(bound)
    return runner(src, spec, bound, max_repetitions)
