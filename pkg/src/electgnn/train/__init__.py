"""Optimisation stack and the experiment drivers."""

from .adversarial import (
    AdversarialConfig,
    AdversarialResult,
    Scenario,
    counterfactual_batch,
    params_digest,
    rational_losses,
    train_adversarial,
)
from .history import History
from .optim import AdamState, OptimConfig, adam_step, clip_grad_norm, global_norm, lr_at
from .supervised import TrainingDiverged, TrainResult, fit, train_mimic, train_welfare

__all__ = [
    "AdversarialConfig",
    "AdversarialResult",
    "Scenario",
    "counterfactual_batch",
    "params_digest",
    "rational_losses",
    "train_adversarial",
    "AdamState",
    "History",
    "OptimConfig",
    "TrainResult",
    "TrainingDiverged",
    "adam_step",
    "clip_grad_norm",
    "fit",
    "global_norm",
    "lr_at",
    "train_mimic",
    "train_welfare",
]
