from .checkpoint import CheckpointError, checkpoint_dict, load_checkpoint, model_from_checkpoint, save_checkpoint
from .config import ConfigError, TrainConfig, TrainReport
from .optim import AdamState, adam_step, mse_loss, target_scale
from .trainer import RESULTS_HEADER, append_results, epoch_order, fit, train, train_seeds

__all__ = [
    "AdamState",
    "CheckpointError",
    "ConfigError",
    "RESULTS_HEADER",
    "TrainConfig",
    "TrainReport",
    "adam_step",
    "append_results",
    "checkpoint_dict",
    "epoch_order",
    "fit",
    "load_checkpoint",
    "model_from_checkpoint",
    "mse_loss",
    "save_checkpoint",
    "target_scale",
    "train",
    "train_seeds",
]
