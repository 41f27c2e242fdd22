"""Inference wrapper binding transformer parameters to the model interface."""

import numpy as np

from .base import NextItemModel
from .config import ModelConfig
from .transformer import last_position_logits

__all__ = ["TransformerModel"]


class TransformerModel(NextItemModel):
    """Trained decoder exposed through the next-item interface.

    Prefixes longer than ``max_seq_len`` are truncated to their most recent
    ``max_seq_len`` items.  Batched calls left-pad with ID 0; padding is
    fully masked, so batch composition can shift a row's logits only through
    BLAS float32 accumulation order (about one ulp).  Repeating an identical
    call is bit-identical.  Inference always runs with dropout disabled.
    """

    def __init__(self, params: dict, config: ModelConfig):
        self.params = params
        self.config = config

    @property
    def item_count(self) -> int:
        return self.config.catalog_size

    def next_logits(self, prefix) -> np.ndarray:
        return self.next_logits_batch([prefix])[0]

    def next_logits_batch(self, prefixes) -> np.ndarray:
        lim = self.config.max_seq_len
        rows = [self._check_prefix(p)[-lim:] for p in prefixes]
        width = max(r.size for r in rows)
        ids = np.zeros((len(rows), width), dtype=np.int64)
        for i, r in enumerate(rows):
            ids[i, width - r.size:] = r
        logits = last_position_logits(self.params, self.config, ids)
        logits = logits.astype(np.float64)
        logits[:, 0] = -np.inf
        return logits
