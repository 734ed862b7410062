"""Identification of low-order process models for grate incineration plants."""

from .dataset import (
    Channel,
    ExperimentSet,
    Record,
    Standardizer,
    assign_groups,
    read_csv,
    split_experiments,
    standardize,
    unstandardize,
    write_csv,
)
from .estimator import FitObjective, FitResult, IdentData, Stage, fit, mse, r_squared, staged_fit
from .ltimodel import (
    AlgebraicLink,
    Composite,
    MisoModel,
    ProcessModel,
    chain_subprocesses,
    load_model,
    output_confidence_band,
    save_model,
    simulate,
    step_response,
)
from .plant import VariableConvention
from .zoo import ZOO, zoo_model

__version__ = "0.1.0"

__all__ = [
    "AlgebraicLink", "Channel", "Composite", "ExperimentSet", "FitObjective", "FitResult",
    "IdentData", "MisoModel", "ProcessModel", "Record", "Stage", "Standardizer",
    "VariableConvention", "ZOO", "assign_groups", "chain_subprocesses", "fit", "load_model",
    "mse", "output_confidence_band", "r_squared", "read_csv", "save_model", "simulate",
    "split_experiments", "staged_fit", "standardize", "step_response", "unstandardize",
    "write_csv", "zoo_model",
]
