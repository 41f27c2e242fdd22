"""Common interface for anything that scores the next item of a sequence.

Decoding and aggregation strategies only require :meth:`next_logits` /
:meth:`next_logits_batch`, so cheap baselines (Markov chains, popularity)
are drop-in substitutes for the trained transformer, both in production code
and as test oracles.
"""

import numpy as np

from ..errors import ContractViolationError, OutOfCatalogError
from ..scores import ScoreVector

__all__ = ["NextItemModel"]


class NextItemModel:
    """Next-item scorer over a dense catalog of ``item_count`` items.

    Subclasses implement :meth:`next_logits`; everything else is derived.
    Logit vectors have length ``item_count + 1`` with the padding entry
    (index 0) set to ``-inf``.  Scoring is read-only and safe to call from
    any number of workers concurrently.
    """

    @property
    def item_count(self) -> int:
        raise NotImplementedError

    def next_logits(self, prefix) -> np.ndarray:
        """Raw logits for the item following ``prefix`` (1-D, length I+1)."""
        raise NotImplementedError

    def next_logits_batch(self, prefixes) -> np.ndarray:
        """Logits for many prefixes at once: (len(prefixes), I+1).

        Default implementation loops; models with a cheaper batched path
        override it.
        """
        return np.stack([self.next_logits(p) for p in prefixes])

    def forward(self, prefix) -> ScoreVector:
        """Spec-facing wrapper of :meth:`next_logits` as a ScoreVector."""
        return ScoreVector(self.next_logits(prefix), "logits")

    def forward_batch(self, prefixes) -> list:
        return [ScoreVector(row, "logits")
                for row in self.next_logits_batch(prefixes)]

    def _check_prefix(self, prefix):
        prefix = np.asarray(prefix, dtype=np.int64)
        if prefix.ndim != 1 or prefix.size == 0:
            raise ContractViolationError("prefix must be a nonempty 1-D sequence")
        if prefix.min() < 1 or prefix.max() > self.item_count:
            raise OutOfCatalogError(
                f"prefix items must lie in [1, {self.item_count}]"
            )
        return prefix
