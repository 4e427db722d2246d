"""Arms, reward laws, mean priors and the sample-counting arm sources.

Every reward observation in the package goes through an :class:`ArmSource`,
which owns the random streams and the sample counter.  Algorithms report
their own totals; tests check those against ``ArmSource.counter``.
"""
from __future__ import annotations

import bisect
import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "RewardDistribution",
    "Bernoulli",
    "Constant",
    "Complement",
    "Arm",
    "MeanPrior",
    "Uniform01",
    "TwoPoint",
    "Discrete",
    "point_mass",
    "GroundTruth",
    "ArmSource",
    "quantile",
    "is_quantile_optimal",
    "is_top_m_optimal",
    "draw_arms",
    "sample",
]

# Kernel codes understood by the LUCB kernels (see qexplore.kernels).
KIND_BERNOULLI = 0
KIND_CONSTANT = 1
KIND_BERNOULLI_COMPLEMENT = 2


# ---------------------------------------------------------------------------
# reward laws
# ---------------------------------------------------------------------------


class RewardDistribution(ABC):
    """A reward law supported on [0, 1]."""

    @abstractmethod
    def mean(self) -> float: ...

    @abstractmethod
    def sample_sum(self, rng: np.random.Generator, times: int) -> float:
        """Sum of ``times`` i.i.d. rewards."""

    @abstractmethod
    def from_uniform(self, u: float) -> float:
        """One reward by inverse transform of a Uniform[0, 1) draw."""

    def kernel_code(self) -> tuple[int, float] | None:
        """``(kind, param)`` for the compiled LUCB loop, or None."""
        return None


@dataclass(frozen=True)
class Bernoulli(RewardDistribution):
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"Bernoulli p must lie in [0, 1], got {self.p}")

    def mean(self) -> float:
        return self.p

    def sample_sum(self, rng, times):
        return float(rng.binomial(times, self.p))

    def from_uniform(self, u):
        return 1.0 if u < self.p else 0.0

    def kernel_code(self):
        return KIND_BERNOULLI, self.p


@dataclass(frozen=True)
class Constant(RewardDistribution):
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"constant reward must lie in [0, 1], got {self.value}")

    def mean(self) -> float:
        return self.value

    def sample_sum(self, rng, times):
        return self.value * times

    def from_uniform(self, u):
        return self.value

    def kernel_code(self):
        return KIND_CONSTANT, self.value


@dataclass(frozen=True)
class Complement(RewardDistribution):
    """Reward ``1 - R`` for ``R`` drawn from ``base``; turns max-search into min-search."""

    base: RewardDistribution

    def mean(self) -> float:
        return 1.0 - self.base.mean()

    def sample_sum(self, rng, times):
        return times - self.base.sample_sum(rng, times)

    def from_uniform(self, u):
        return 1.0 - self.base.from_uniform(u)

    def kernel_code(self):
        code = self.base.kernel_code()
        if code is None:
            return None
        kind, param = code
        if kind == KIND_BERNOULLI:
            return KIND_BERNOULLI_COMPLEMENT, param
        if kind == KIND_CONSTANT:
            return KIND_CONSTANT, 1.0 - param
        return None


def _as_dist(x: RewardDistribution | float) -> RewardDistribution:
    if isinstance(x, RewardDistribution):
        return x
    return Bernoulli(float(x))


@dataclass(frozen=True)
class Arm:
    """A handle on one reward source.

    ``base_index`` points back into the finite set an arm was drawn from
    (finite sources and infinite extensions); it is None for prior draws.
    """

    id: int
    dist: RewardDistribution
    base_index: int | None = None

    @property
    def mean(self) -> float:
        return self.dist.mean()


# ---------------------------------------------------------------------------
# priors over arm means
# ---------------------------------------------------------------------------


class MeanPrior(ABC):
    """Distribution of arm means for an infinite arm set."""

    @abstractmethod
    def cdf(self, x: float) -> float: ...

    @abstractmethod
    def quantile(self, p: float) -> float:
        """``sup{x : F(x) <= p}``."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray: ...

    @abstractmethod
    def describe(self) -> str: ...


@dataclass(frozen=True)
class Uniform01(MeanPrior):
    def cdf(self, x):
        return min(1.0, max(0.0, x))

    def quantile(self, p):
        _check_p(p)
        return float(p)

    def sample(self, rng, count):
        return rng.random(count)

    def describe(self):
        return "uniform01"


@dataclass(frozen=True)
class Discrete(MeanPrior):
    """Finitely supported prior; ``support`` maps mean -> weight (normalized here)."""

    support: tuple[tuple[float, float], ...]
    _atoms: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __init__(self, support: Mapping[float, float] | Iterable[tuple[float, float]]):
        items = support.items() if isinstance(support, Mapping) else support
        merged: dict[float, float] = {}
        for value, weight in items:
            value, weight = float(value), float(weight)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"atom {value} outside [0, 1]")
            if weight < 0:
                raise ValueError(f"negative weight {weight}")
            merged[value] = merged.get(value, 0.0) + weight
        merged = {v: w for v, w in merged.items() if w > 0}
        if not merged:
            raise ValueError("discrete prior needs positive total weight")
        atoms = sorted(merged)
        weights = np.array([merged[a] for a in atoms])
        cum = np.cumsum(weights / weights.sum())
        cum[-1] = 1.0
        object.__setattr__(self, "support", tuple((a, merged[a]) for a in atoms))
        object.__setattr__(self, "_atoms", np.array(atoms))
        object.__setattr__(self, "_cum", cum)

    def cdf(self, x):
        i = bisect.bisect_right(self._atoms.tolist(), x)
        return 0.0 if i == 0 else float(self._cum[i - 1])

    def quantile(self, p):
        _check_p(p)
        # F is a right-continuous step function; sup{x : F(x) <= p} is the
        # first atom whose cumulative mass exceeds p.
        i = int(np.searchsorted(self._cum, p, side="right"))
        return float(self._atoms[min(i, len(self._atoms) - 1)])

    def sample(self, rng, count):
        u = rng.random(count)
        idx = np.searchsorted(self._cum, u, side="right")
        return self._atoms[np.minimum(idx, len(self._atoms) - 1)]

    def describe(self):
        body = ";".join(f"{a!r}:{w!r}" for a, w in self.support)
        return f"discrete({body})"


@dataclass(frozen=True)
class TwoPoint(MeanPrior):
    """Mean ``hi`` with probability ``rho``, else ``lo``."""

    rho: float
    hi: float
    lo: float

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if not 0.0 <= self.lo < self.hi <= 1.0:
            raise ValueError("need 0 <= lo < hi <= 1")

    def cdf(self, x):
        if x < self.lo:
            return 0.0
        return 1.0 if x >= self.hi else 1.0 - self.rho

    def quantile(self, p):
        _check_p(p)
        return self.lo if 1.0 - self.rho > p else self.hi

    def sample(self, rng, count):
        return np.where(rng.random(count) < self.rho, self.hi, self.lo)

    def describe(self):
        return f"two_point({self.rho!r};{self.hi!r};{self.lo!r})"

    @classmethod
    def hard_instance(cls, rho: float, eps: float) -> "TwoPoint":
        """Means 1/2 +- 0.55 eps, the upper one with probability rho."""
        return cls(rho, 0.5 + 0.55 * eps, 0.5 - 0.55 * eps)


def point_mass(value: float) -> Discrete:
    return Discrete({value: 1.0})


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {p}")


def quantile(prior: MeanPrior, p: float) -> float:
    """Generalized inverse ``sup{x : F(x) <= p}`` of the prior CDF."""
    return prior.quantile(p)


# ---------------------------------------------------------------------------
# ground truth and optimality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroundTruth:
    """Known means for scoring: a finite mean list and/or a prior."""

    means: tuple[float, ...] | None = None
    prior: MeanPrior | None = None

    @classmethod
    def from_means(cls, means: Iterable[float]) -> "GroundTruth":
        return cls(means=tuple(float(m) for m in means))

    @classmethod
    def from_prior(cls, prior: MeanPrior) -> "GroundTruth":
        return cls(prior=prior)

    @property
    def sorted_means(self) -> list[float]:
        if self.means is None:
            raise ValueError("ground truth has no finite mean list")
        return sorted(self.means, reverse=True)

    def lambda_m(self, m: int) -> float:
        """The m-th largest mean."""
        ranked = self.sorted_means
        if not 1 <= m <= len(ranked):
            raise ValueError(f"rank m={m} out of range 1..{len(ranked)}")
        return ranked[m - 1]

    def lambda_rho(self, rho: float) -> float:
        """Top-rho quantile of the means, ``F^{-1}(1 - rho)``."""
        if self.prior is not None:
            return self.prior.quantile(1.0 - rho)
        if self.means is None:
            raise ValueError("ground truth is empty")
        # infinite extension of the finite set: uniform over its means
        counts: dict[float, float] = {}
        for mu in self.means:
            counts[mu] = counts.get(mu, 0.0) + 1.0
        return Discrete(counts).quantile(1.0 - rho)

    def mean_of(self, arm: Arm) -> float:
        if self.means is not None and self.prior is None:
            if arm.base_index is None or not 0 <= arm.base_index < len(self.means):
                raise KeyError(f"arm {arm.id} is not part of this finite set")
            return self.means[arm.base_index]
        return arm.mean


def is_quantile_optimal(mean: float, truth: GroundTruth, eps: float, rho: float) -> bool:
    """[eps, rho]-optimality: ``mean >= lambda_rho - eps``."""
    return mean >= truth.lambda_rho(rho) - eps


def is_top_m_optimal(mean: float, truth: GroundTruth, eps: float, m: int) -> bool:
    """(eps, m)-optimality: ``mean + eps >= lambda_[m]``."""
    return mean + eps >= truth.lambda_m(m)


# ---------------------------------------------------------------------------
# arm sources
# ---------------------------------------------------------------------------


class _Streams:
    """RNG streams and counters shared by a source and its views."""

    def __init__(self, seed):
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        draw, reward, aux = ss.spawn(3)
        self.draw = np.random.default_rng(draw)
        self.reward = np.random.default_rng(reward)
        self.aux = np.random.default_rng(aux)
        self.counter = 0
        self.ids = itertools.count()


class ArmSource:
    """Gateway for every arm draw and reward; build one with the classmethods below.

    Sources are single-threaded; use one per trial.
    """

    FINITE = "finite"
    INFINITE = "infinite"
    EXTENSION = "extension"

    def __init__(self, kind: str, *, base: Sequence[Arm] = (), prior: MeanPrior | None = None,
                 excluded: frozenset[int] = frozenset(), streams: _Streams):
        self.kind = kind
        self.prior = prior
        self._base = list(base)
        self._excluded = excluded
        self._pool = [a for a in self._base if a.base_index not in excluded]
        self._s = streams

    @classmethod
    def finite(cls, dists: Iterable[RewardDistribution | float], seed=0) -> "ArmSource":
        streams = _Streams(seed)
        base = [Arm(next(streams.ids), _as_dist(d), i) for i, d in enumerate(dists)]
        return cls(cls.FINITE, base=base, streams=streams)

    @classmethod
    def infinite(cls, prior: MeanPrior, seed=0) -> "ArmSource":
        return cls(cls.INFINITE, prior=prior, streams=_Streams(seed))

    @classmethod
    def extension(cls, dists: Iterable[RewardDistribution | float], seed=0) -> "ArmSource":
        return cls.finite(dists, seed).extension_view()

    def extension_view(self, exclude: Iterable[int] = ()) -> "ArmSource":
        """Infinite extension of the base set minus ``exclude`` (base indices).

        The view shares this source's streams and counter.
        """
        if self.kind == self.INFINITE:
            raise TypeError("an infinite prior source has no finite base set")
        excluded = self._excluded | frozenset(exclude)
        view = ArmSource(self.EXTENSION, base=self._base, excluded=excluded, streams=self._s)
        if not view._pool:
            raise ValueError("extension view has no arms left")
        return view

    # -- inspection -------------------------------------------------------

    @property
    def counter(self) -> int:
        return self._s.counter

    @property
    def arms(self) -> list[Arm]:
        """Base arms still available (finite sources and extensions)."""
        if self.kind == self.INFINITE:
            raise TypeError("an infinite source has no arm list")
        return list(self._pool)

    @property
    def base_arms(self) -> list[Arm]:
        return list(self._base)

    def ground_truth(self) -> GroundTruth:
        if self.kind == self.INFINITE:
            return GroundTruth.from_prior(self.prior)
        return GroundTruth.from_means(a.mean for a in self._base)

    # -- arm creation -----------------------------------------------------

    def draw_arms(self, count: int) -> list[Arm]:
        """Draw ``count`` fresh arm handles; does not touch the sample counter."""
        if count < 1:
            raise ValueError("count must be >= 1")
        if self.kind == self.FINITE:
            raise TypeError("finite sources expose their arm list; use .arms or extension_view()")
        if self.kind == self.INFINITE:
            means = self.prior.sample(self._s.draw, count)
            return [Arm(next(self._s.ids), Bernoulli(float(mu))) for mu in means]
        picks = self._s.draw.integers(len(self._pool), size=count)
        out = []
        for i in picks:
            base = self._pool[int(i)]
            out.append(Arm(next(self._s.ids), base.dist, base.base_index))
        return out

    def make_arm(self, dist: RewardDistribution) -> Arm:
        """A handle on an ad-hoc reward law (e.g. a constant comparison arm)."""
        return Arm(next(self._s.ids), dist)

    # -- sampling ---------------------------------------------------------

    def sample_sum(self, arm: Arm, times: int) -> float:
        if times < 1:
            raise ValueError("times must be >= 1")
        self._s.counter += times
        return arm.dist.sample_sum(self._s.reward, times)

    def sample(self, arm: Arm, times: int) -> tuple[float, int]:
        """Empirical mean of ``times`` fresh rewards, and ``times``."""
        return self.sample_sum(arm, times) / times, times

    def uniforms(self, size: int) -> np.ndarray:
        """Raw Uniform[0, 1) block from the reward stream, for per-draw kernels."""
        return self._s.reward.random(size)

    def charge(self, samples: int) -> None:
        """Account for rewards generated from :meth:`uniforms`."""
        self._s.counter += samples

    def random_index(self, n: int) -> int:
        return int(self._s.aux.integers(n))


def draw_arms(src: ArmSource, count: int) -> list[Arm]:
    return src.draw_arms(count)


def sample(src: ArmSource, arm: Arm, times: int) -> tuple[float, int]:
    return src.sample(arm, times)
