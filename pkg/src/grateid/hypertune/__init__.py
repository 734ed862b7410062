"""Bayesian optimization of the identification hyperparameters."""

from .acquisition import expected_improvement, probability_of_feasibility
from .gp import GaussianProcess, matern52
from .space import HyperParams, HyperSpace
from .tune import (
    KFoldResult,
    Observation,
    ObservationSet,
    TuneResult,
    kfold_objective,
    propose_next,
    trace_entry,
    tune,
)

__all__ = [
    "GaussianProcess", "HyperParams", "HyperSpace", "KFoldResult", "Observation",
    "ObservationSet", "TuneResult", "expected_improvement", "kfold_objective", "matern52",
    "probability_of_feasibility", "propose_next", "trace_entry", "tune",
]
