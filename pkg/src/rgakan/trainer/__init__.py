from .adaptive import (AnnealConfig, CausalConfig, LossWeights, RadConfig, RbaConfig, anneal_update,
                       causal_weights, rad_probabilities, rad_resample, rba_update)
from .fitting import FitConfig, FitResult, fit_function
from .history import COLUMNS, RunHistory
from .loop import TrainConfig, TrainResult, train
from .loss import LossBatch, LossOutput, batch_from_pool, composite_loss, ic_targets, loss_terms
from .optim import AdamState, Schedule, adam_init, adam_step, guarded_adam_step, lr_schedule

__all__ = [
    "AnnealConfig", "CausalConfig", "LossWeights", "RadConfig", "RbaConfig", "anneal_update",
    "causal_weights", "rad_probabilities", "rad_resample", "rba_update",
    "FitConfig", "FitResult", "fit_function", "COLUMNS", "RunHistory", "TrainConfig", "TrainResult", "train",
    "LossBatch", "LossOutput", "batch_from_pool", "composite_loss", "ic_targets", "loss_terms",
    "AdamState", "Schedule", "adam_init", "adam_step", "guarded_adam_step", "lr_schedule",
]
