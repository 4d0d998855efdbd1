"""Bayesian dose-escalation designs, simulation and trial conduct."""

__version__ = "0.1.0"

from .criteria import (
    AitchisonCriterion,
    BlrmLoss,
    Cibp,
    EwocFixed,
    EwocTR,
    EwocTdfb,
    SquaredDistance,
    TargetConfig,
    aitchison_distance,
    blrm_loss_point,
    calibrate_asymmetry,
    cibp,
    ewoc_loss_point,
    sq_distance,
    tdfb_alpha,
    tr_alpha,
)
from .designs import DoseEscalationDesign, InsufficientDataError, TrialCompleteError
from .models import (
    PowerModel,
    Skeleton,
    TwoParamLogisticModel,
    calibrate_skeleton,
    logistic2_prob,
    power_prob,
)
from .posterior import PosteriorRep, build_grid, post_expect, post_mean_tox, update
from .simulate import (
    ScenarioSpec,
    StudyReport,
    accuracy_index,
    run_study,
    simulate_trial,
    summarize,
)

__all__ = [
    "AitchisonCriterion",
    "BlrmLoss",
    "Cibp",
    "DoseEscalationDesign",
    "EwocFixed",
    "EwocTR",
    "EwocTdfb",
    "InsufficientDataError",
    "PosteriorRep",
    "PowerModel",
    "ScenarioSpec",
    "Skeleton",
    "SquaredDistance",
    "StudyReport",
    "TargetConfig",
    "TrialCompleteError",
    "TwoParamLogisticModel",
    "accuracy_index",
    "aitchison_distance",
    "blrm_loss_point",
    "build_grid",
    "calibrate_asymmetry",
    "calibrate_skeleton",
    "cibp",
    "ewoc_loss_point",
    "logistic2_prob",
    "post_expect",
    "post_mean_tox",
    "power_prob",
    "run_study",
    "simulate_trial",
    "sq_distance",
    "summarize",
    "tdfb_alpha",
    "tr_alpha",
    "update",
]
