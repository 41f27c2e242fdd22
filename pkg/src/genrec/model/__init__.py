"""Next-item models: from-scratch transformer, baselines, training, checkpoints."""

from .base import NextItemModel
from .baselines import MarkovModel, PopularityModel, TransitionTableModel
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModelConfig, TrainConfig
from .train import Adam, EpochStats, TrainResult, train_model, validation_ndcg
from .transformer import forward_logits, init_parameters, loss_and_gradients
from .wrapper import TransformerModel

__all__ = [
    "NextItemModel",
    "MarkovModel",
    "PopularityModel",
    "TransitionTableModel",
    "ModelConfig",
    "TrainConfig",
    "TransformerModel",
    "Adam",
    "EpochStats",
    "TrainResult",
    "train_model",
    "validation_ndcg",
    "init_parameters",
    "forward_logits",
    "loss_and_gradients",
    "save_checkpoint",
    "load_checkpoint",
]
