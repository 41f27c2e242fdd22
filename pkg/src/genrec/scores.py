"""Per-item score vectors over the dense catalog.

A :class:`ScoreVector` holds one real number per catalog entry, indexed by
dense item ID.  Index 0 is the padding slot and is always masked: ``-inf``
when the vector carries logits, exactly ``0.0`` when it carries
probabilities.  Masked catalog items (history, already-generated items) use
the same sentinel values.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["ScoreVector", "masked_softmax", "PROB_SUM_TOL"]

PROB_SUM_TOL = 1e-5


@dataclass
class ScoreVector:
    """Relevance over the full catalog: ``values[i]`` scores dense item ``i``.

    ``kind`` tags the scale: ``"logits"`` (unnormalized, masked entries are
    ``-inf``) or ``"probabilities"`` (non-negative, sums to 1, masked entries
    are 0).
    """

    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in ("logits", "probabilities"):
            raise ValueError(f"unknown ScoreVector kind: {self.kind!r}")
        self.values = np.asarray(self.values)

    @property
    def item_count(self) -> int:
        """Number of real items I (excludes the padding slot)."""
        return self.values.shape[0] - 1

    def validate(self) -> None:
        """Raise if the vector violates the invariants of its kind."""
        v = self.values
        if v.ndim != 1 or v.shape[0] < 2:
            raise ValueError("ScoreVector must be 1-D with at least one item")
        if self.kind == "probabilities":
            if not np.all(v >= 0.0):
                raise ValueError("probability vector has negative entries")
            if abs(float(v.sum()) - 1.0) > PROB_SUM_TOL:
                raise ValueError(f"probability vector sums to {v.sum()}, not 1")
            if v[0] != 0.0:
                raise ValueError("padding entry of a probability vector must be 0")
        else:
            if not np.isneginf(v[0]):
                raise ValueError("padding entry of a logit vector must be -inf")

    def copy(self) -> "ScoreVector":
        return ScoreVector(self.values.copy(), self.kind)


def masked_softmax(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Stable softmax of a logit vector whose masked entries are ``-inf``.

    Masked entries come out exactly 0.  Computed with max-subtraction, so any
    finite logit scale is safe; ``temperature`` divides the logits first.
    """
    if temperature <= 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    finite = np.isfinite(logits)
    if not finite.any():
        from .errors import MaskedDistributionError

        raise MaskedDistributionError("all catalog entries are masked")
    m = logits[finite].max()
    with np.errstate(invalid="ignore"):
        z = (logits - m) / temperature
    exp = np.where(finite, np.exp(np.where(finite, z, 0.0)), 0.0)
    return exp / exp.sum()
