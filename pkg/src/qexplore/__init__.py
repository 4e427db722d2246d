"""Quantile exploration for infinite- and finite-armed bandits."""
from qexplore.algorithms import (
    ALGORITHMS,
    ProblemSpec,
    QuantileResult,
    al_q_fk,
    al_q_fu,
    al_q_ik,
    al_q_iu,
    cb_al_q_ik,
    iur_baseline,
    solve,
)
from qexplore.confidence import BoundSchedule, ConfidenceBound
from qexplore.env import (
    Arm,
    ArmSource,
    Bernoulli,
    Complement,
    Constant,
    Discrete,
    GroundTruth,
    TwoPoint,
    Uniform01,
    point_mass,
)
from qexplore.kernels import BACKEND
from qexplore.verify import failure_rate, score

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "ProblemSpec", "QuantileResult", "al_q_fk", "al_q_fu", "al_q_ik", "al_q_iu",
    "cb_al_q_ik", "iur_baseline", "solve", "BoundSchedule", "ConfidenceBound", "Arm", "ArmSource",
    "Bernoulli", "Complement", "Constant", "Discrete", "GroundTruth", "TwoPoint", "Uniform01",
    "point_mass", "BACKEND", "failure_rate", "score",
]
