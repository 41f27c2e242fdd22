"""Cheap next-item models: smoothed Markov chain, popularity, fixed tables.

These train in milliseconds and have closed-form behaviour, which makes them
the reference oracles for decoding and aggregation tests; the popularity
model doubles as a sanity baseline in evaluations.
"""

import numpy as np

from ..errors import ContractViolationError
from .base import NextItemModel

__all__ = ["MarkovModel", "PopularityModel", "TransitionTableModel"]


class MarkovModel(NextItemModel):
    """First-order transition model with add-one smoothing.

    ``P(j | ..., i) = (count(i -> j) + 1) / (count(i -> *) + I)``; rows with
    no observed transitions fall back to the uniform distribution.  Logits
    are the log of these probabilities.
    """

    def __init__(self, train_sequences, item_count: int):
        if item_count < 1:
            raise ContractViolationError("item_count must be positive")
        counts = np.zeros((item_count + 1, item_count + 1), dtype=np.float64)
        seen = 0
        for seq in train_sequences:
            seq = np.asarray(seq, dtype=np.int64)
            seen += seq.size
            if seq.size >= 2:
                np.add.at(counts, (seq[:-1], seq[1:]), 1.0)
        if seen == 0:
            raise ContractViolationError("training corpus is empty")
        counts = counts[:, 1:] + 1.0                       # add-one smoothing
        probs = counts / counts.sum(axis=1, keepdims=True)
        self._log_probs = np.full((item_count + 1, item_count + 1), -np.inf)
        self._log_probs[:, 1:] = np.log(probs)
        self._item_count = item_count

    @property
    def item_count(self) -> int:
        return self._item_count

    def next_logits(self, prefix) -> np.ndarray:
        prefix = self._check_prefix(prefix)
        return self._log_probs[prefix[-1]].copy()

    def next_logits_batch(self, prefixes) -> np.ndarray:
        last = np.asarray([self._check_prefix(p)[-1] for p in prefixes])
        return self._log_probs[last].copy()

    def transition_row(self, item: int) -> np.ndarray:
        """Smoothed probability row P(. | item), length I+1 with P(pad)=0."""
        row = np.exp(self._log_probs[item])
        row[0] = 0.0
        return row


class PopularityModel(NextItemModel):
    """Prefix-independent logits: log of add-one-smoothed global frequency."""

    def __init__(self, train_sequences, item_count: int):
        if item_count < 1:
            raise ContractViolationError("item_count must be positive")
        counts = np.zeros(item_count + 1, dtype=np.float64)
        for seq in train_sequences:
            seq = np.asarray(seq, dtype=np.int64)
            np.add.at(counts, seq, 1.0)
        smoothed = (counts[1:] + 1.0) / (counts[1:].sum() + item_count)
        self._logits = np.concatenate(([-np.inf], np.log(smoothed)))
        self._item_count = item_count

    @property
    def item_count(self) -> int:
        return self._item_count

    def next_logits(self, prefix) -> np.ndarray:
        self._check_prefix(prefix)
        return self._logits.copy()

    def next_logits_batch(self, prefixes) -> np.ndarray:
        for p in prefixes:
            self._check_prefix(p)
        return np.tile(self._logits, (len(prefixes), 1))


class TransitionTableModel(NextItemModel):
    """Markov model with an explicitly given transition matrix.

    ``matrix[i, j]`` is P(next = j | last = i) over dense IDs 0..I (row 0 and
    column 0 are ignored; rows must sum to 1 over columns 1..I).  Used to
    build synthetic tasks with known dynamics, e.g. the deterministic cycle
    ``i -> i+1``.
    """

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ContractViolationError("matrix must be square (I+1, I+1)")
        rows = matrix[1:, 1:].sum(axis=1)
        if not np.allclose(rows, 1.0, atol=1e-8):
            raise ContractViolationError("each row must sum to 1 over items 1..I")
        self._matrix = matrix
        with np.errstate(divide="ignore"):
            self._logits = np.where(matrix > 0.0, np.log(matrix), -np.inf)
        self._logits[:, 0] = -np.inf
        self._item_count = matrix.shape[0] - 1

    @classmethod
    def cycle(cls, item_count: int) -> "TransitionTableModel":
        """Deterministic chain i -> i+1 (wrapping I -> 1)."""
        m = np.zeros((item_count + 1, item_count + 1))
        for i in range(1, item_count + 1):
            m[i, i % item_count + 1] = 1.0
        m[0, 1:] = 1.0 / item_count
        return cls(m)

    @property
    def item_count(self) -> int:
        return self._item_count

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def next_logits(self, prefix) -> np.ndarray:
        prefix = self._check_prefix(prefix)
        return self._logits[prefix[-1]].copy()

    def next_logits_batch(self, prefixes) -> np.ndarray:
        last = np.asarray([self._check_prefix(p)[-1] for p in prefixes])
        return self._logits[last].copy()
