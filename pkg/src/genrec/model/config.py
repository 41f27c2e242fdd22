"""Model and training hyperparameter containers."""

from dataclasses import dataclass

__all__ = ["ModelConfig", "TrainConfig"]


@dataclass
class ModelConfig:
    """Decoder hyperparameters.

    ``catalog_size`` is the number of real items I; the embedding table has
    I + 1 rows because dense ID 0 is reserved for padding.
    """

    catalog_size: int
    hidden_size: int = 64
    num_blocks: int = 2
    num_heads: int = 1
    dropout_rate: float = 0.1
    max_seq_len: int = 128

    def __post_init__(self):
        if self.catalog_size < 1:
            raise ValueError("catalog_size must be positive")
        if self.hidden_size < 1 or self.num_blocks < 1 or self.num_heads < 1:
            raise ValueError("hidden_size, num_blocks, num_heads must be positive")
        if self.hidden_size % self.num_heads != 0:
            raise ValueError(
                f"hidden_size {self.hidden_size} not divisible by "
                f"num_heads {self.num_heads}"
            )
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.max_seq_len < 2:
            raise ValueError("max_seq_len must be at least 2")

    @property
    def vocab_size(self) -> int:
        return self.catalog_size + 1

    @property
    def head_dim(self) -> int:
        return self.hidden_size // self.num_heads


@dataclass
class TrainConfig:
    """Optimization settings for from-scratch training.

    Early stopping monitors validation NDCG@10 computed with the one-pass
    Top-K prediction strategy after every epoch; training stops once the
    metric fails to improve for ``patience`` consecutive epochs.
    """

    batch_size: int = 64
    learning_rate: float = 1e-3
    max_epochs: int = 100
    patience: int = 5
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    eval_k: int = 10

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be positive")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
