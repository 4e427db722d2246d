import math

import numpy as np
import pytest

from qexplore import kernels
from qexplore.confidence import ConfidenceBound, hoeffding_lower, hoeffding_upper
from qexplore.env import Arm, ArmSource, Bernoulli, Constant, Uniform01, point_mass
from qexplore.subroutines import (
    halving,
    halving_worst,
    lambda_estimation,
    median_elimination,
    median_elimination_cost,
    pac_budget,
    pac_maxing,
)
from qexplore.verify import within_pac


def _finite(means, seed):
    src = ArmSource.finite(means, seed=seed)
    return src, src.arms


# -- Median-Elimination ------------------------------------------------------


def test_median_elimination_single_arm_is_free():
    src, arms = _finite([0.4], 0)
    sel = median_elimination(arms, 0.1, 0.1, src)
    assert sel.arm is arms[0]
    assert sel.samples == 0 == src.counter


def test_median_elimination_finds_large_gap_winner():
    wins = 0
    for seed in range(100):
        src, arms = _finite([0.1] * 3 + [0.9] + [0.1] * 4, seed)
        sel = median_elimination(arms, 0.2, 0.1, src)
        wins += sel.arm.mean == 0.9
        assert sel.samples == src.counter == median_elimination_cost(8, 0.2, 0.1)
    assert wins >= 95


def test_median_elimination_identical_arms_always_correct():
    for seed in range(100):
        src, arms = _finite([0.5] * 6, seed)
        assert median_elimination(arms, 0.1, 0.1, src).arm.mean == 0.5


# -- Halving -----------------------------------------------------------------


def test_halving_keeps_everything_when_k_is_n():
    src, arms = _finite([0.1, 0.5, 0.3], 0)
    sel = halving(arms, 3, 0.1, 0.1, src)
    assert sel.arms == arms and sel.samples == 0 == src.counter


def test_halving_rejects_k_above_n():
    src, arms = _finite([0.1, 0.5], 0)
    with pytest.raises(ValueError):
        halving(arms, 3, 0.1, 0.1, src)


def test_halving_top_three():
    trials, fails = 100, 0
    for seed in range(trials):
        src, arms = _finite([0.05 * i for i in range(1, 17)], seed)
        sel = halving(arms, 3, 0.04, 0.1, src)
        assert len({a.id for a in sel.arms}) == 3
        assert sel.samples == src.counter
        fails += any(a.mean < 0.70 - 0.04 - 1e-12 for a in sel.arms)
    assert within_pac(fails, trials, 0.1)


def test_halving_worst_finds_the_low_arm():
    trials, fails = 100, 0
    for seed in range(trials):
        src, arms = _finite([0.9] * 4 + [0.1] + [0.9] * 5, seed)
        sel = halving_worst(arms, 0.2, 0.1, src)
        assert sel.arm in arms
        fails += sel.arm.mean != 0.1
    assert within_pac(fails, trials, 0.1)


def test_halving_worst_on_constants_is_exact_min():
    src, arms = _finite([Constant(v) for v in (0.6, 0.2, 0.8, 0.4)], 0)
    assert halving_worst(arms, 0.1, 0.1, src).arm is arms[1]
    assert halving(arms, 1, 0.1, 0.1, src).arm is arms[2]


# -- pac_budget --------------------------------------------------------------


def test_pac_budget_small_case_by_hand():
    c = 1 + math.exp(-1)
    first = 8 / 0.25 * math.log(4 / 0.5)
    second = 8 * c * 2 / 0.25 * math.log(4 * c * 2 / 0.25)
    assert second > first
    assert pac_budget(1, 0.5, 0.5) == math.ceil(3 + second) == 334


def test_pac_budget_first_branch_dominates_for_many_arms_small_delta():
    n, eps, delta = 50, 0.1, 1e-12
    first = 8 * n / eps**2 * math.log(4 * n / delta)
    assert pac_budget(n, eps, delta) == math.ceil(3 * n + first)


def test_pac_budget_monotone_and_scales_with_eps():
    values = [pac_budget(n, 0.1, 0.1) for n in range(1, 40)]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert pac_budget(10, 0.05, 0.1) >= 4 * pac_budget(10, 0.1, 0.1) - 4 * 30


# -- PACMaxing ---------------------------------------------------------------


def test_pac_maxing_singleton():
    src, arms = _finite([0.3], 0)
    res = pac_maxing(arms, 0.1, 0.1, 10, src)
    assert res.arm is arms[0] and not res.exhausted and res.samples == 1 == src.counter


def test_pac_maxing_budget_must_cover_first_pass():
    src, arms = _finite([0.3, 0.4, 0.5], 0)
    with pytest.raises(ValueError):
        pac_maxing(arms, 0.1, 0.1, 2, src)


def test_pac_maxing_rejects_unsupported_laws():
    class Odd(Constant):
        def kernel_code(self):
            return None

    src = ArmSource.infinite(Uniform01(), seed=0)
    arms = [src.make_arm(Odd(0.2)), src.make_arm(Constant(0.4))]
    with pytest.raises(TypeError):
        pac_maxing(arms, 0.1, 0.1, 1000, src)


@pytest.mark.parametrize("backend", kernels.available())
def test_pac_maxing_constants_closed_form(backend):
    delta, eps = 0.1, 0.1
    # both arms are sampled every step; find the first count s with U(b) - L(a) <= eps
    s = 1
    while True:
        ds = delta / (4 * 2 * s**2)
        gap = hoeffding_upper(0.1, s, ds) - hoeffding_lower(0.9, s, ds)
        if gap <= eps:
            break
        s += 1
    src = ArmSource.infinite(Uniform01(), seed=0)
    arms = [src.make_arm(Constant(0.9)), src.make_arm(Constant(0.1))]
    res = pac_maxing(arms, eps, delta, 10**6, src, "hoeffding", backend=backend)
    assert res.arm is arms[0] and not res.exhausted
    assert res.samples == 2 * s == src.counter


def test_pac_maxing_exhausts_at_minimal_budget():
    src, arms = _finite([0.5, 0.5, 0.5], 2)
    res = pac_maxing(arms, 0.01, 0.1, 3, src)
    assert res.exhausted and res.samples == 3 and res.arm in arms


@pytest.mark.parametrize("budget", [4, 5, 6, 7, 50, 51])
def test_pac_maxing_never_overshoots_budget(budget):
    src, arms = _finite([0.5, 0.45, 0.4], 1)
    res = pac_maxing(arms, 0.001, 0.1, budget, src)
    assert res.samples <= budget
    assert res.samples > budget - 2


def _replay_trace(means, seed, eps, delta, budget, bound):
    """Recompute the LUCB path from the same uniforms with independent code."""
    src, arms = _finite(means, seed)
    res = pac_maxing(arms, eps, delta, budget, src, bound, trace=True)

    replay, _ = _finite(means, seed)
    n = len(means)
    block = max(2048, 2 * n)
    buf, pos = replay.uniforms(block), 0

    def take(k):
        nonlocal buf, pos
        if pos + k > len(buf):
            buf, pos = replay.uniforms(block), 0
        out = buf[pos:pos + k]
        pos += k
        return out

    kind = ConfidenceBound.parse(bound)
    sums = np.array([float(u < p) for u, p in zip(take(n), means)])
    counts = np.ones(n)

    def bounds(i):
        ds = delta / (4 * n * counts[i] ** 2)
        mu = sums[i] / counts[i]
        return kind.upper(mu, int(counts[i]), ds), kind.lower(mu, int(counts[i]), ds)

    ub = np.array([bounds(i)[0] for i in range(n)])
    lb = np.array([bounds(i)[1] for i in range(n)])
    a = int(np.argmax(sums / counts))
    b = max((i for i in range(n) if i != a), key=lambda i: (ub[i], -i))
    t = n
    for rec_t, rec_a, rec_b, rec_gap in res.trace:
        u = take(2)
        sums[a] += u[0] < means[a]
        sums[b] += u[1] < means[b]
        counts[a] += 1
        counts[b] += 1
        t += 2
        for i in (a, b):
            ub[i], lb[i] = bounds(i)
        emp = sums / counts
        a = int(np.argmax(emp))  # first maximizer
        b = max((i for i in range(n) if i != a), key=lambda i: (ub[i], -i))
        assert (rec_t, rec_a, rec_b) == (t, a, b)
        assert emp[rec_a] == emp.max()
        assert ub[rec_b] == max(ub[i] for i in range(n) if i != rec_a)
        assert rec_gap == pytest.approx(ub[b] - lb[a], abs=1e-12)
    return res


@pytest.mark.parametrize("bound", ["hoeffding", "kl"])
@pytest.mark.parametrize("seed", range(5))
def test_pac_maxing_trace_invariant(bound, seed):
    means = [0.9, 0.8, 0.7, 0.6, 0.5, 0.5, 0.4]
    res = _replay_trace(means, seed, 0.1, 0.1, pac_budget(len(means), 0.1, 0.1), bound)
    assert res.trace
    assert res.trace[-1][3] <= 0.1 or res.exhausted


def test_pac_maxing_backends_agree():
    if "compiled" not in kernels.available():
        pytest.skip("compiled kernel not built")
    for seed in range(30):
        out = {}
        for backend in ("compiled", "python"):
            src, arms = _finite([0.9, 0.85, 0.8, 0.3, 0.2], seed)
            res = pac_maxing(arms, 0.05, 0.1, 40_000, src, "kl", backend=backend)
            out[backend] = (res.arm.id, res.samples, res.exhausted, src.counter,
                            src.uniforms(1)[0], src.random_index(1000))
        assert out["compiled"] == out["python"]


def test_pac_maxing_pac_on_ten_arms():
    means = [0.9 - 0.1 * i for i in range(10)]
    trials, fails = 60, 0
    for seed in range(trials):
        src, arms = _finite(means, seed)
        res = pac_maxing(arms, 0.1, 0.1, pac_budget(10, 0.1, 0.1), src)
        fails += res.arm.mean < 0.8 - 1e-12
    assert within_pac(fails, trials, 0.1)


# -- LambdaEstimation --------------------------------------------------------


def test_lambda_estimation_point_mass():
    for seed in range(20):
        src = ArmSource.infinite(point_mass(0.6), seed=seed)
        est = lambda_estimation(src, 0.3, 0.2, 0.2)
        assert 0.6 - 0.2 <= est.value <= 0.6
        assert est.samples_used == src.counter


def test_lambda_estimation_sample_count_is_deterministic():
    counts = {lambda_estimation(ArmSource.infinite(Uniform01(), seed=s), 0.3, 0.2, 0.2).samples_used
              for s in range(5)}
    assert len(counts) == 1


@pytest.mark.parametrize("kw", [dict(rho=0.6), dict(eps=0.0), dict(delta=0.7)])
def test_lambda_estimation_validates(kw):
    args = dict(rho=0.3, eps=0.2, delta=0.2) | kw
    with pytest.raises(ValueError):
        lambda_estimation(ArmSource.infinite(Uniform01()), **args)


def test_lambda_estimation_eps_split():
    src = ArmSource.infinite(Uniform01(), seed=0)
    with pytest.raises(ValueError):
        lambda_estimation(src, 0.3, 0.2, 0.2, eps_split=(0.1, 0.1, 0.1))
    est = lambda_estimation(src, 0.3, 0.2, 0.2, eps_split=(0.08, 0.04, 0.04))
    assert est.samples_used == src.counter


def test_complement_arm_keeps_identity():
    src, arms = _finite([Bernoulli(0.3), Bernoulli(0.7)], 0)
    picked = halving_worst(arms, 0.2, 0.1, src).arm
    assert isinstance(picked, Arm) and picked in arms
