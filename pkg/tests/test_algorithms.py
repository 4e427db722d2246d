import numpy as np
import pytest

from qexplore.algorithms import (
    ProblemSpec,
    al_q_fk,
    al_q_fu,
    al_q_ik,
    al_q_iu,
    cb_al_q_ik,
    iur_baseline,
    solve,
)
from qexplore.env import ArmSource, Constant, GroundTruth, TwoPoint, Uniform01, point_mass
from qexplore.subroutines import lambda_estimation, pac_budget, pac_maxing
from qexplore.verify import score, within_pac


def _uniform(seed):
    return ArmSource.infinite(Uniform01(), seed=seed)


def _check_accounting(res, src):
    assert res.total_samples == sum(res.phase_breakdown.values()) == src.counter


# -- specs -------------------------------------------------------------------


def test_spec_requires_threshold_for_known_variants():
    with pytest.raises(ValueError):
        ProblemSpec("Q-IK", 1, 0.1, 0.1, rho=0.1)
    with pytest.raises(ValueError):
        ProblemSpec("Q-IU", 1, 0.1, 0.1, rho=0.1, lam=0.9)


@pytest.mark.parametrize("variant, k, m, n", [("Q-FK", 3, 2, 10), ("Q-FK", 1, 6, 10),
                                              ("Q-FU", 2, 4, 10)])
def test_spec_finite_ranges(variant, k, m, n):
    lam = 0.5 if variant == "Q-FK" else None
    with pytest.raises(ValueError):
        ProblemSpec(variant, k, 0.1, 0.1, m=m, n=n, lam=lam)


def test_solve_checks_variant():
    spec = ProblemSpec("Q-IU", 1, 0.2, 0.2, rho=0.3)
    with pytest.raises(ValueError):
        solve("al_q_ik", _uniform(0), spec)
    with pytest.raises(ValueError):
        solve("nope", _uniform(0), spec)


# -- AL-Q-IK -----------------------------------------------------------------


def test_al_q_ik_first_stage_size():
    res = al_q_ik(ArmSource.infinite(point_mass(0.8), seed=0), 1, 0.5, 0.1, 0.1, 0.8)
    assert res.info["n1"] == 3


def test_al_q_ik_point_mass():
    src = ArmSource.infinite(point_mass(0.8), seed=1)
    res = al_q_ik(src, 2, 0.2, 0.1, 0.1, 0.8)
    assert [a.mean for a in res.arms] == [0.8, 0.8]
    assert len({a.id for a in res.arms}) == 2
    _check_accounting(res, src)


def test_al_q_ik_pac_and_linear_in_k():
    means = {}
    for k in (1, 3, 9):
        trials, fails, samples = 300, 0, []
        spec = ProblemSpec("Q-IK", k, 0.1, 0.1, rho=0.1, lam=0.9)
        for seed in range(trials):
            src = _uniform(seed)
            res = solve("al_q_ik", src, spec)
            _check_accounting(res, src)
            assert len(res.arms) == k
            fails += not score(res, src.ground_truth(), spec).success
            samples.append(res.total_samples)
        assert within_pac(fails, trials, 0.1)
        means[k] = np.mean(samples) / k
    assert max(means.values()) / min(means.values()) < 4


def test_al_q_ik_rejects_bad_split():
    with pytest.raises(ValueError):
        al_q_ik(_uniform(0), 1, 0.1, 0.1, 0.1, 0.9, eps1=0.1)


def test_repetition_cap():
    # no arm can pass a threshold above every mean
    with pytest.raises(RuntimeError):
        al_q_ik(ArmSource.infinite(point_mass(0.2), seed=0), 1, 0.1, 0.1, 0.1, 0.9,
                max_repetitions=5)


# -- CB-AL-Q-IK --------------------------------------------------------------


@pytest.mark.parametrize("offset, accept", [(0.1, True), (-0.2, False)])
def test_cb_duel_with_constant_arms(offset, accept):
    lam, eps, delta, k = 0.6, 0.1, 0.1, 1
    src = ArmSource.infinite(Uniform01(), seed=0)
    cand = src.make_arm(Constant(lam + offset))
    ref = src.make_arm(Constant(lam - 7 * eps / 8))
    res = pac_maxing([cand, ref], eps / 8, delta / k, pac_budget(2, eps / 8, delta / k), src)
    assert not res.exhausted
    assert (res.arm is cand) == accept


def test_cb_al_q_ik_beats_al_q_ik_on_uniform():
    spec = ProblemSpec("Q-IK", 1, 0.1, 0.01, rho=0.05, lam=0.95)
    trials, fails, cheaper = 100, 0, 0
    for seed in range(trials):
        src = _uniform(seed)
        cb = solve("cb_al_q_ik", src, spec, "kl")
        _check_accounting(cb, src)
        fails += not score(cb, src.ground_truth(), spec).success
        plain = solve("al_q_ik", _uniform(seed), spec)
        cheaper += cb.total_samples < plain.total_samples
    assert within_pac(fails, trials, 0.01)
    assert cheaper == trials


def test_cb_al_q_ik_hoeffding_runs():
    src = _uniform(3)
    res = cb_al_q_ik(src, 2, 0.1, 0.1, 0.1, 0.9, "hoeffding")
    assert len(res.arms) == 2
    _check_accounting(res, src)


# -- IUR ---------------------------------------------------------------------


def test_iur_point_mass_accepts_immediately():
    src = ArmSource.infinite(point_mass(0.7), seed=0)
    res = iur_baseline(src, 3, 0.1, 0.1, 0.1, 0.7)
    assert res.repetitions == 3
    _check_accounting(res, src)


def test_iur_uniform_is_pac():
    spec = ProblemSpec("Q-IK", 1, 0.1, 0.1, rho=0.1, lam=0.9)
    fails = 0
    for seed in range(300):
        src = _uniform(seed)
        res = solve("iur_baseline", src, spec)
        _check_accounting(res, src)
        fails += not score(res, src.ground_truth(), spec).success
    assert within_pac(fails, 300, 0.1)


def test_iur_repetitions_are_geometric():
    prior = TwoPoint(0.1, 0.9, 0.2)
    reps = [iur_baseline(ArmSource.infinite(prior, seed=s), 1, 0.1, 0.1, 0.1, 0.9).repetitions
            for s in range(500)]
    assert abs(np.mean(reps) - 10) <= 2


# -- AL-Q-IU -----------------------------------------------------------------


def test_al_q_iu_point_mass():
    src = ArmSource.infinite(point_mass(0.7), seed=0)
    res = al_q_iu(src, 2, 0.3, 0.2, 0.2)
    assert 0.7 - 0.1 <= res.info["lambda_hat"] <= 0.7
    assert [a.mean for a in res.arms] == [0.7, 0.7]
    _check_accounting(res, src)


def test_al_q_iu_estimation_phase_ignores_k():
    phases = {k: al_q_iu(_uniform(5), k, 0.3, 0.2, 0.2).phase_breakdown["estimation"]
              for k in (1, 5)}
    assert phases[1] == phases[5]


def test_al_q_iu_relaxed_pac():
    spec = ProblemSpec("Q-IU", 2, 0.2, 0.2, rho=0.3)
    fails = 0
    for seed in range(100):
        src = _uniform(seed)
        res = solve("al_q_iu", src, spec)
        _check_accounting(res, src)
        fails += not score(res, src.ground_truth(), spec).success
    assert within_pac(fails, 100, 0.2)


def test_al_q_iu_rejects_large_rho():
    with pytest.raises(ValueError):
        al_q_iu(_uniform(0), 1, 0.6, 0.2, 0.2)


# -- AL-Q-FK -----------------------------------------------------------------


def test_al_q_fk_small_instance():
    for seed in range(50):
        src = ArmSource.finite([0.9, 0.8, 0.2, 0.1], seed=seed)
        res = al_q_fk(src, 2, 2, 0.05, 0.1, 0.8)
        assert {a.mean for a in res.arms} == {0.9, 0.8}
        assert len({a.base_index for a in res.arms}) == 2
        assert res.info["rhos"] == [2 / 4, 1 / 3]
        _check_accounting(res, src)


def test_al_q_fk_single_pick_is_one_al_q_ik_call():
    means = [i / 20 for i in range(1, 21)]
    a = al_q_fk(ArmSource.finite(means, seed=9), 5, 1, 0.1, 0.1, 0.8)
    b = al_q_ik(ArmSource.finite(means, seed=9).extension_view(), 1, 5 / 20, 0.1, 0.1, 0.8)
    assert a.total_samples == b.total_samples
    assert [x.base_index for x in a.arms] == [x.base_index for x in b.arms]


def test_al_q_fk_deletion_schedule():
    means = [i / 100 for i in range(1, 101)]
    res = al_q_fk(ArmSource.finite(means, seed=0), 50, 10, 0.02, 0.1, 0.51)
    assert res.info["rhos"] == [(50 - t + 1) / (100 - t + 1) for t in range(1, 11)]
    assert len({a.base_index for a in res.arms}) == 10


def test_al_q_fk_with_confidence_bounds():
    src = ArmSource.finite([0.9, 0.8, 0.2, 0.1], seed=0)
    res = al_q_fk(src, 2, 2, 0.1, 0.1, 0.8, bound="kl")
    assert {a.mean for a in res.arms} == {0.9, 0.8}
    _check_accounting(res, src)


# -- AL-Q-FU -----------------------------------------------------------------


def test_al_q_fu_homogeneous():
    src = ArmSource.finite([0.6] * 20, seed=0)
    spec = ProblemSpec("Q-FU", 2, 0.2, 0.2, m=6, n=20)
    res = solve("al_q_fu", src, spec)
    assert score(res, src.ground_truth(), spec).success
    _check_accounting(res, src)


def test_al_q_fu_estimation_matches_standalone_call():
    means = [i / 200 for i in range(1, 201)]
    res = al_q_fu(ArmSource.finite(means, seed=4), 60, 5, 0.2, 0.2)
    src = ArmSource.finite(means, seed=4)
    est = lambda_estimation(src.extension_view(), 60 / 200, 0.1, 0.1)
    assert res.phase_breakdown["estimation"] == est.samples_used
    assert res.info["lambda_hat"] == est.value


def test_al_q_fu_top_m_success():
    means = [i / 200 for i in range(1, 201)]
    assert GroundTruth.from_means(means).lambda_m(60) == pytest.approx(0.705)
    spec = ProblemSpec("Q-FU", 5, 0.2, 0.2, m=60, n=200)
    fails = 0
    for seed in range(100):
        src = ArmSource.finite(means, seed=seed)
        res = solve("al_q_fu", src, spec)
        verdict = score(res, src.ground_truth(), spec)
        assert not verdict.duplicates
        fails += not verdict.success
    assert within_pac(fails, 100, 0.2)


def test_al_q_fu_requires_room_for_halving():
    with pytest.raises(ValueError):
        al_q_fu(ArmSource.finite([0.5] * 20), 4, 2, 0.2, 0.2)
