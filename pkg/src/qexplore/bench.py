"""Seeded Monte-Carlo sweeps over solver parameters, with CSV output and summaries.

A config is a YAML file::

    algorithm: al_q_ik          # al_q_ik | cb_al_q_ik | iur_baseline | al_q_iu | al_q_fk | al_q_fu
    problem:
      k: 1
      rho: 0.1                  # infinite variants
      # m: 50                   # finite variants
      eps: 0.1
      delta: 0.1
      # lam: 0.9                # known-threshold variants; default is the true threshold
    prior:                      # infinite variants
      kind: uniform01           # uniform01 | two_point | hard | discrete | point_mass
    # arms:                     # finite variants
    #   grid: 100               # means i/100 for i = 1..100 (or `means: [...]`)
    bound: kl                   # kl | hoeffding | none
    trials: 100
    seed: 7
    jobs: 1
    timing: true                # false writes wall_ms = 0 for byte-stable CSVs
    sweep:
      param: k
      values: [1, 2, 4]
    output: results.csv

Command-line flags override the file (see :mod:`qexplore.cli`).
"""
from __future__ import annotations

import csv
import dataclasses
import re
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml
from scipy import stats

from qexplore.algorithms import ALGORITHMS, ProblemSpec, solve
from qexplore.confidence import ConfidenceBound
from qexplore.env import ArmSource, Discrete, GroundTruth, MeanPrior, TwoPoint, Uniform01, point_mass
from qexplore.verify import failure_rate, score

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "TrialRecord",
    "SummaryRow",
    "CSV_HEADER",
    "load_config",
    "trial_seed",
    "run",
    "run_trial",
    "summarize",
    "compare",
    "write_csv",
    "read_csv",
    "rescore",
    "parse_instance",
]

CSV_HEADER = ["algorithm", "k", "rho", "m", "n", "eps", "delta", "bound", "prior",
              "trial", "seed", "samples", "success", "wall_ms"]
SWEEPABLE = ("k", "rho", "m", "eps", "delta", "lam", "bound")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    algorithm: str
    problem: dict[str, Any]
    sweep_param: str
    sweep_values: list[Any]
    prior: MeanPrior | None = None
    means: list[float] | None = None
    instance: str = ""
    bound: str | None = None
    trials: int = 100
    seed: int = 0
    jobs: int = 1
    timing: bool = True
    max_repetitions: int | None = None
    output: str = "results.csv"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm: unknown {self.algorithm!r}; choose from {sorted(ALGORITHMS)}")
        if self.sweep_param not in SWEEPABLE:
            raise ConfigError(f"sweep.param: {self.sweep_param!r} is not one of {SWEEPABLE}")
        if not self.sweep_values:
            raise ConfigError("sweep.values: empty sweep axis")
        if self.trials < 1:
            raise ConfigError("trials: must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs: must be >= 1")
        variant = ALGORITHMS[self.algorithm][0]
        finite = variant in ("Q-FK", "Q-FU")
        if finite and self.means is None:
            raise ConfigError(f"arms: {self.algorithm} needs a finite arm set")
        if not finite and self.prior is None:
            raise ConfigError(f"prior: {self.algorithm} needs a mean prior")
        # fail early on bad parameter combinations
        for value in self.sweep_values:
            try:
                self.spec_at(value)
                self.bound_at(value)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"sweep {self.sweep_param}={value!r}: {exc}") from None

    @property
    def variant(self) -> str:
        return ALGORITHMS[self.algorithm][0]

    def truth(self) -> GroundTruth:
        if self.means is not None:
            return GroundTruth.from_means(self.means)
        return GroundTruth.from_prior(self.prior)

    def params_at(self, value) -> dict[str, Any]:
        params = dict(self.problem)
        if self.sweep_param != "bound":
            params[self.sweep_param] = value
        return params

    def bound_at(self, value) -> str | None:
        raw = value if self.sweep_param == "bound" else self.bound
        if raw is None or str(raw).lower() == "none":
            return None
        return ConfidenceBound.parse(raw).value

    def spec_at(self, value) -> ProblemSpec:
        p = self.params_at(value)
        variant = self.variant
        truth = self.truth()
        known = variant in ("Q-IK", "Q-FK")
        lam = p.get("lam")
        if variant in ("Q-FK", "Q-FU"):
            n = len(self.means)
            m = int(p["m"])
            if known and lam is None:
                lam = truth.lambda_m(m)
            return ProblemSpec(variant, int(p["k"]), float(p["eps"]), float(p["delta"]),
                               m=m, n=n, lam=lam if known else None)
        rho = float(p["rho"])
        if known and lam is None:
            lam = truth.lambda_rho(rho)
        return ProblemSpec(variant, int(p["k"]), float(p["eps"]), float(p["delta"]),
                           rho=rho, lam=lam if known else None)


def _build_prior(section: dict) -> MeanPrior:
    kind = section.get("kind")
    try:
        if kind == "uniform01":
            return Uniform01()
        if kind == "two_point":
            return TwoPoint(float(section["rho"]), float(section["hi"]), float(section["lo"]))
        if kind == "hard":
            return TwoPoint.hard_instance(float(section["rho"]), float(section["eps"]))
        if kind == "discrete":
            return Discrete({float(v): float(w) for v, w in section["support"].items()})
        if kind == "point_mass":
            return point_mass(float(section["value"]))
    except KeyError as exc:
        raise ConfigError(f"prior: missing field {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"prior: {exc}") from None
    raise ConfigError(f"prior.kind: unknown {kind!r}")


def _build_arms(section: dict) -> tuple[list[float], str]:
    if "grid" in section:
        n = int(section["grid"])
        if n < 2:
            raise ConfigError("arms.grid: need at least 2 arms")
        return [i / n for i in range(1, n + 1)], f"grid({n})"
    if "means" in section:
        means = [float(x) for x in section["means"]]
        if not means or any(not 0.0 <= x <= 1.0 for x in means):
            raise ConfigError("arms.means: need a nonempty list of means in [0, 1]")
        return means, "means(" + ";".join(repr(x) for x in means) + ")"
    raise ConfigError("arms: give `grid: n` or `means: [...]`")


def config_from_dict(raw: dict, **overrides) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    for key in ("algorithm", "problem", "sweep"):
        if key not in raw:
            raise ConfigError(f"{key}: missing")
    sweep = raw["sweep"]
    if not isinstance(sweep, dict) or "param" not in sweep or "values" not in sweep:
        raise ConfigError("sweep: needs `param` and `values`")
    prior = means = None
    instance = ""
    if "prior" in raw:
        prior = _build_prior(raw["prior"])
        instance = prior.describe()
    if "arms" in raw:
        means, instance = _build_arms(raw["arms"])
    try:
        return ExperimentConfig(
            algorithm=str(raw["algorithm"]),
            problem=dict(raw["problem"]),
            sweep_param=str(sweep["param"]),
            sweep_values=list(sweep["values"] or []),
            prior=prior,
            means=means,
            instance=instance,
            bound=raw.get("bound"),
            trials=int(raw.get("trials", 100)),
            seed=int(raw.get("seed", 0)),
            jobs=int(raw.get("jobs", 1)),
            timing=bool(raw.get("timing", True)),
            max_repetitions=raw.get("max_repetitions"),
            output=str(raw.get("output", "results.csv")),
        )
    except KeyError as exc:
        raise ConfigError(f"problem: missing field {exc}") from None


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    return config_from_dict(raw, **overrides)


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
    algorithm: str
    k: int
    rho: float | None
    m: int | None
    n: int | None
    eps: float
    delta: float
    bound: str
    prior: str
    trial: int
    seed: int
    samples: int
    success: bool
    wall_ms: float


def trial_seed(master: int, point_key: str, trial: int) -> int:
    """Seed for one trial at one sweep point.

    Keyed on the sweep *value*, so reordering sweep values reorders rows
    without changing them.
    """
    ss = np.random.SeedSequence([master, zlib.crc32(point_key.encode()), trial])
    return int(ss.generate_state(1, np.uint64)[0])


def _point_key(param: str, value) -> str:
    return f"{param}={value!r}"


def make_source(instance: str, seed: int) -> ArmSource:
    prior, means = parse_instance(instance)
    if means is not None:
        return ArmSource.finite(means, seed=seed)
    return ArmSource.infinite(prior, seed=seed)


def run_trial(algorithm: str, spec: ProblemSpec, instance: str, bound: str | None,
              trial: int, seed: int, timing: bool = True,
              max_repetitions: int | None = None) -> TrialRecord:
    src = make_source(instance, seed)
    start = time.perf_counter()
    result = solve(algorithm, src, spec, bound, max_repetitions)
    elapsed = (time.perf_counter() - start) * 1000.0
    if result.total_samples != src.counter:
        raise RuntimeError(f"{algorithm} reported {result.total_samples} samples, "
                           f"source counted {src.counter}")
    verdict = score(result, src.ground_truth(), spec)
    return TrialRecord(
        algorithm=algorithm, k=spec.k, rho=spec.rho, m=spec.m, n=spec.n,
        eps=spec.eps, delta=spec.delta, bound=bound or "none", prior=instance,
        trial=trial, seed=seed, samples=result.total_samples, success=verdict.success,
        wall_ms=round(elapsed, 3) if timing else 0.0,
    )


def _run_task(task):
    return run_trial(*task)


def _tasks(cfg: ExperimentConfig):
    for value in cfg.sweep_values:
        spec = cfg.spec_at(value)
        bound = cfg.bound_at(value)
        key = _point_key(cfg.sweep_param, value)
        for trial in range(cfg.trials):
            yield (cfg.algorithm, spec, cfg.instance, bound, trial,
                   trial_seed(cfg.seed, key, trial), cfg.timing, cfg.max_repetitions)


def execute(cfg: ExperimentConfig) -> list[TrialRecord]:
    """Run every (sweep point, trial); rows come back sweep-major, trial-minor."""
    tasks = list(_tasks(cfg))
    if cfg.jobs == 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.jobs))))


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SummaryRow:
    point: str
    trials: int
    mean_samples: float
    failure_rate: float
    wilson_low: float | None
    wilson_high: float | None
    pac: str  # "pass" | "fail" | "n/a" (fewer than 30 trials)


def _group_key(r: TrialRecord) -> tuple:
    return (r.algorithm, r.k, r.rho, r.m, r.n, r.eps, r.delta, r.bound, r.prior)


def _describe_key(key: tuple) -> str:
    names = ("algorithm", "k", "rho", "m", "n", "eps", "delta", "bound")
    return " ".join(f"{n}={v}" for n, v in zip(names, key) if v is not None)


def summarize(records: Sequence[TrialRecord]) -> list[SummaryRow]:
    groups: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault(_group_key(r), []).append(r)
    rows = []
    for key, rs in groups.items():
        fails = sum(not r.success for r in rs)
        mean = float(np.mean([r.samples for r in rs]))
        if len(rs) >= 30:
            fr = failure_rate([r.success for r in rs], rs[0].delta)
            rows.append(SummaryRow(_describe_key(key), len(rs), mean, fr.rate, fr.low, fr.high,
                                   "pass" if fr.passed else "fail"))
        else:
            rows.append(SummaryRow(_describe_key(key), len(rs), mean, fails / len(rs),
                                   None, None, "n/a"))
    return rows


def format_summary(rows: Sequence[SummaryRow]) -> str:
    lines = [f"{'sweep point':<60} {'trials':>6} {'mean samples':>14} {'fail':>6} "
             f"{'wilson 95%':>17} {'PAC':>4}"]
    for r in rows:
        ci = "-" if r.wilson_low is None else f"[{r.wilson_low:.3f}, {r.wilson_high:.3f}]"
        lines.append(f"{r.point:<60} {r.trials:>6} {r.mean_samples:>14.1f} "
                     f"{r.failure_rate:>6.3f} {ci:>17} {r.pac:>4}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(records: Iterable[TrialRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])


def _opt(cast, text: str):
    return None if text == "" else cast(text)


def read_csv(path: str | Path) -> list[TrialRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            TrialRecord(
                algorithm=row["algorithm"], k=int(row["k"]), rho=_opt(float, row["rho"]),
                m=_opt(int, row["m"]), n=_opt(int, row["n"]), eps=float(row["eps"]),
                delta=float(row["delta"]), bound=row["bound"], prior=row["prior"],
                trial=int(row["trial"]), seed=int(row["seed"]), samples=int(row["samples"]),
                success=row["success"] == "1", wall_ms=float(row["wall_ms"]),
            )
            for row in reader
        ]


@dataclass
class RunOutput:
    records: list[TrialRecord]
    summary: list[SummaryRow]
    path: Path | None = None


def run(cfg: ExperimentConfig, out: str | Path | None = None) -> RunOutput:
    records = execute(cfg)
    path = Path(out or cfg.output)
    write_csv(records, path)
    return RunOutput(records, summarize(records), path)


# ---------------------------------------------------------------------------
# comparisons
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    point: str
    algorithm: str
    bound: str
    mean_samples: float
    ratio: float  # mean samples relative to the first config
    ratio_low: float
    ratio_high: float


_PAIRING_FIELDS = ("problem", "sweep_param", "sweep_values", "instance", "seed", "trials")


def compare(configs: Sequence[ExperimentConfig], n_resamples: int = 2000) -> list[ComparisonRow]:
    """Paired mean-sample ratios of each config against the first, per sweep point.

    Configs must share instance, problem, seed, trials and sweep axis, so
    trial i of every config sees the same seed.
    """
    if len(configs) < 2:
        raise ConfigError("compare needs at least two configs")
    first = configs[0]
    for cfg in configs[1:]:
        for name in _PAIRING_FIELDS:
            if getattr(cfg, name) != getattr(first, name):
                raise ConfigError(f"mismatched axes: configs differ in {name}")
    runs = [execute(cfg) for cfg in configs]
    rows = []
    per_point = first.trials
    for p, value in enumerate(first.sweep_values):
        base = np.array([r.samples for r in runs[0][p * per_point:(p + 1) * per_point]], float)
        for cfg, recs in zip(configs, runs):
            cur = np.array([r.samples for r in recs[p * per_point:(p + 1) * per_point]], float)
            ratio = cur.mean() / base.mean()
            low = high = ratio
            if per_point > 1 and not np.array_equal(cur, base):
                res = stats.bootstrap((cur, base), lambda x, y: np.mean(x) / np.mean(y),
                                      paired=True, vectorized=False, n_resamples=n_resamples,
                                      method="percentile", random_state=first.seed)
                low, high = float(res.confidence_interval.low), float(res.confidence_interval.high)
            rows.append(ComparisonRow(_point_key(first.sweep_param, value), cfg.algorithm,
                                      cfg.bound_at(value) or "none", float(cur.mean()),
                                      float(ratio), low, high))
    return rows


def format_comparison(rows: Sequence[ComparisonRow]) -> str:
    lines = [f"{'sweep point':<16} {'algorithm':<14} {'bound':<10} {'mean samples':>14} "
             f"{'ratio':>8} {'bootstrap 95%':>20}"]
    for r in rows:
        lines.append(f"{r.point:<16} {r.algorithm:<14} {r.bound:<10} {r.mean_samples:>14.1f} "
                     f"{r.ratio:>8.4f} {f'[{r.ratio_low:.4f}, {r.ratio_high:.4f}]':>20}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# re-scoring saved runs
# ---------------------------------------------------------------------------

_INSTANCE = re.compile(r"^(\w+)(?:\((.*)\))?$")


def parse_instance(text: str) -> tuple[MeanPrior | None, list[float] | None]:
    """Inverse of the ``prior`` column: returns ``(prior, None)`` or ``(None, means)``."""
    match = _INSTANCE.match(text.strip())
    if not match:
        raise ValueError(f"cannot parse instance {text!r}")
    kind, body = match.groups()
    parts = [] if not body else body.split(";")
    if kind == "uniform01":
        return Uniform01(), None
    if kind == "two_point":
        rho, hi, lo = (float(x) for x in parts)
        return TwoPoint(rho, hi, lo), None
    if kind == "discrete":
        return Discrete([tuple(float(y) for y in x.split(":")) for x in parts]), None
    if kind == "grid":
        n = int(body)
        return None, [i / n for i in range(1, n + 1)]
    if kind == "means":
        return None, [float(x) for x in parts]
    raise ValueError(f"unknown instance kind {kind!r}")


@dataclass
class RescoreReport:
    summary: list[SummaryRow]
    mismatches: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches and all(r.pac != "fail" for r in self.summary)


def rescore(records: Sequence[TrialRecord], replay: bool = False) -> RescoreReport:
    """PAC check per sweep point; with ``replay``, re-run each row from its seed.

    Replay assumes the run used the default (true) threshold for
    known-threshold problems.
    """
    report = RescoreReport(summarize(records))
    if not replay:
        return report
    for r in records:
        variant = ALGORITHMS[r.algorithm][0]
        prior, means = parse_instance(r.prior)
        truth = GroundTruth.from_means(means) if means is not None else GroundTruth.from_prior(prior)
        if variant in ("Q-FK", "Q-FU"):
            lam = truth.lambda_m(r.m) if variant == "Q-FK" else None
            spec = ProblemSpec(variant, r.k, r.eps, r.delta, m=r.m, n=r.n, lam=lam)
        else:
            lam = truth.lambda_rho(r.rho) if variant == "Q-IK" else None
            spec = ProblemSpec(variant, r.k, r.eps, r.delta, rho=r.rho, lam=lam)
        bound = None if r.bound == "none" else r.bound
        again = run_trial(r.algorithm, spec, r.prior, bound, r.trial, r.seed, timing=False)
        if (again.samples, again.success) != (r.samples, r.success):
            report.mismatches.append(
                f"trial {r.trial} seed {r.seed}: recorded samples={r.samples} success={r.success}, "
                f"replayed samples={again.samples} success={again.success}")
    return report


def replace(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return dataclasses.replace(cfg, **changes)
