"""Single-sequence recommendation strategies over any next-item model.

Four strategies produce a ranked Top-K list from a user history:

* ``topk_prediction``: one forward pass, take the K best-scored items;
* ``greedy_decode``: generate item-by-item, always picking the argmax;
* ``beam_search``: keep the B continuations with the best summed
  log-probability of the model's chain-rule factorization;
* ``temperature_sample``: draw each step from the temperature-adjusted
  softmax, optionally restricted to the k most probable items.

Constraint handling is shared: by default, items already in the user history
and items already generated earlier in the same sequence are banned.  Banned
items are excluded from selection; sequence log-scores always refer to the
model's raw next-item distribution (softmax over real items, banned entries
not renormalized away), so the chain-rule score of a sequence is comparable
across strategies.  All ties break toward the ascending item ID.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, MaskedDistributionError
from .scores import ScoreVector, masked_softmax

__all__ = [
    "GenerationConstraints",
    "GeneratedSequence",
    "RecommendationList",
    "ARGMAX_TEMPERATURE",
    "apply_temperature",
    "topk_filter",
    "topk_prediction",
    "greedy_decode",
    "beam_search",
    "temperature_sample",
    "positional_list",
    "sequence_log_score",
]

# below this temperature, sampling short-circuits to argmax: exp(l/T) would
# overflow while the limit distribution is a point mass
ARGMAX_TEMPERATURE = 1e-4


@dataclass
class GenerationConstraints:
    """What an output sequence may not contain."""

    forbid_history: bool = True
    forbid_repeats: bool = True


DEFAULT_CONSTRAINTS = GenerationConstraints()


@dataclass
class GeneratedSequence:
    """Items produced by one decoding run, in generation order.

    ``step_logprobs[k]`` is the log of the raw model probability of the item
    chosen at step k (so their sum is the chain-rule log-score of the
    sequence).  ``step_scores`` holds the full sampled distribution per step
    when recording was requested.  ``truncated`` flags runs that exhausted
    the catalog before reaching the target length.
    """

    items: list
    step_scores: list | None = None
    step_logprobs: list | None = None
    truncated: bool = False


@dataclass
class RecommendationList:
    """Ranked item IDs with non-increasing relevance scores."""

    items: np.ndarray
    scores: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        self.items = np.asarray(self.items, dtype=np.int64)
        self.scores = np.asarray(self.scores, dtype=np.float64)

    def __len__(self):
        return self.items.size


def positional_list(seq) -> RecommendationList:
    """Read a generated sequence positionally: item j gets relevance 1/j."""
    items = list(seq.items) if isinstance(seq, GeneratedSequence) else list(seq)
    truncated = seq.truncated if isinstance(seq, GeneratedSequence) else False
    scores = np.array([1.0 / (j + 1) for j in range(len(items))])
    return RecommendationList(np.array(items, dtype=np.int64), scores, truncated)


def sequence_log_score(seq: GeneratedSequence) -> float:
    """Chain-rule log-probability of the sequence under the raw model."""
    if seq.step_logprobs is None:
        raise ContractViolationError("sequence was generated without log-probs")
    return float(sum(seq.step_logprobs))


# ---------------------------------------------------------------------------
# score-vector operations
# ---------------------------------------------------------------------------

def apply_temperature(scores: ScoreVector, temperature: float) -> ScoreVector:
    """Temperature softmax: P(i) = exp(l_i / T) / sum_j exp(l_j / T).

    Masked entries (``-inf`` logits) come out exactly 0; computed with
    max-subtraction so any finite logit scale is safe.
    """
    if scores.kind != "logits":
        raise ContractViolationError("apply_temperature expects logits")
    if temperature <= 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    return ScoreVector(masked_softmax(scores.values, temperature), "probabilities")


def topk_filter(probs: ScoreVector, k: int) -> ScoreVector:
    """Keep the k most probable items, renormalized to sum 1.

    Ties at the k-th place break toward the ascending item ID; when k covers
    the whole support the vector is returned unchanged.
    """
    if probs.kind != "probabilities":
        raise ContractViolationError("topk_filter expects probabilities")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    v = probs.values
    if k >= int((v > 0.0).sum()):
        return probs.copy()
    order = np.lexsort((np.arange(v.size), -v))
    keep = order[:k]
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return ScoreVector(out / out.sum(), "probabilities")


# ---------------------------------------------------------------------------
# shared internals
# ---------------------------------------------------------------------------

def _history_array(model, history):
    history = np.asarray(history, dtype=np.int64)
    if history.ndim != 1 or history.size == 0:
        raise ContractViolationError("history must be a nonempty 1-D sequence")
    if history.min() < 1 or history.max() > model.item_count:
        raise ContractViolationError("history contains out-of-catalog items")
    return history


def _initial_ban(model, history, constraints):
    banned = np.zeros(model.item_count + 1, dtype=bool)
    banned[0] = True
    if constraints.forbid_history:
        banned[history] = True
    return banned


def _log_softmax_raw(logits):
    """Log of the model's raw distribution; -inf entries stay -inf."""
    finite = np.isfinite(logits)
    m = logits[finite].max()
    lse = m + np.log(np.exp(logits[finite] - m).sum())
    return logits - lse


def _masked(logits, banned):
    out = logits.astype(np.float64, copy=True)
    out[banned] = -np.inf
    return out


def _sample_step(raw_logits, banned, temperature, topk, rng, record):
    """One sampling step; returns (choice, recorded distribution or None).

    The recorded distribution is the temperature softmax over unbanned items
    (before any top-k filtering), i.e. exactly what the sampler would draw
    from when top-k filtering is disabled.
    """
    masked = _masked(raw_logits, banned)
    if not np.isfinite(masked).any():
        raise MaskedDistributionError("all items are banned at this step")
    if temperature <= ARGMAX_TEMPERATURE:
        choice = int(np.argmax(masked))
        if record:
            onehot = np.zeros(masked.size)
            onehot[choice] = 1.0
            return choice, onehot
        return choice, None
    probs = masked_softmax(masked, temperature)
    recorded = probs.copy() if record else None
    if topk is not None:
        probs = topk_filter(ScoreVector(probs, "probabilities"), topk).values
    nz = np.flatnonzero(probs > 0.0)
    cum = np.cumsum(probs[nz])
    j = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    choice = int(nz[min(j, nz.size - 1)])
    return choice, recorded


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------

def topk_prediction(model, history, k: int,
                    constraints: GenerationConstraints = DEFAULT_CONSTRAINTS
                    ) -> RecommendationList:
    """One forward pass; the k best unbanned items, scored by their logits."""
    if k < 1:
        raise ValueError("k must be at least 1")
    history = _history_array(model, history)
    logits = _masked(np.asarray(model.next_logits(history), dtype=np.float64),
                     _initial_ban(model, history, constraints))
    order = np.lexsort((np.arange(logits.size), -logits))
    order = order[np.isfinite(logits[order])]
    truncated = order.size < k
    if truncated:
        warnings.warn(f"only {order.size} items available for a top-{k} list")
    top = order[:k]
    return RecommendationList(top, logits[top], truncated)


def greedy_decode(model, history, k: int,
                  constraints: GenerationConstraints = DEFAULT_CONSTRAINTS
                  ) -> GeneratedSequence:
    """Generate k items, taking the argmax of the banned-masked logits each step."""
    if k < 1:
        raise ValueError("k must be at least 1")
    history = _history_array(model, history)
    banned = _initial_ban(model, history, constraints)
    prefix = history.tolist()
    items, logprobs = [], []
    truncated = False
    for _ in range(k):
        raw = np.asarray(model.next_logits(np.array(prefix, dtype=np.int64)),
                         dtype=np.float64)
        masked = _masked(raw, banned)
        if not np.isfinite(masked).any():
            truncated = True
            break
        choice = int(np.argmax(masked))
        items.append(choice)
        logprobs.append(float(_log_softmax_raw(raw)[choice]))
        prefix.append(choice)
        if constraints.forbid_repeats:
            banned[choice] = True
    return GeneratedSequence(items, None, logprobs, truncated)


def beam_search(model, history, k: int, beam_width: int,
                constraints: GenerationConstraints = DEFAULT_CONSTRAINTS
                ) -> GeneratedSequence:
    """Keep the ``beam_width`` best continuations by summed raw log-probability.

    All beams have the same length, so no length normalization is applied
    anywhere.  The returned sequence is the single best finished beam;
    exact score ties resolve to the lexicographically smallest item tuple.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if beam_width < 1:
        raise ValueError("beam width must be at least 1")
    history = _history_array(model, history)
    base_ban = _initial_ban(model, history, constraints)
    beams = [(0.0, (), ())]  # (score, items, per-step logprobs)
    truncated = False
    for _ in range(k):
        prefixes = [np.concatenate([history, np.array(b[1], dtype=np.int64)])
                    for b in beams]
        batch = np.asarray(model.next_logits_batch(prefixes), dtype=np.float64)
        candidates = []
        for (score, items, lps), raw in zip(beams, batch):
            logp = _log_softmax_raw(raw)
            allowed = np.isfinite(logp) & ~base_ban
            if constraints.forbid_repeats and items:
                allowed[list(items)] = False
            idx = np.flatnonzero(allowed)
            if idx.size == 0:
                continue
            row_order = np.lexsort((idx, -logp[idx]))[:beam_width]
            for i in idx[row_order]:
                candidates.append((score + logp[i], items + (int(i),),
                                   lps + (float(logp[i]),)))
        if not candidates:
            truncated = True
            break
        candidates.sort(key=lambda c: (-c[0], c[1]))
        if len(candidates) < beam_width:
            warnings.warn(
                f"beam width {beam_width} capped to {len(candidates)} candidates"
            )
        beams = candidates[:beam_width]
    best = beams[0]
    return GeneratedSequence(list(best[1]), None, list(best[2]), truncated)


def temperature_sample(model, history, k: int, temperature: float,
                       topk: int | None = None, rng=None,
                       constraints: GenerationConstraints = DEFAULT_CONSTRAINTS,
                       record_scores: bool = False) -> GeneratedSequence:
    """Sample k items step by step from the temperature-adjusted distribution.

    Each step masks banned items, renormalizes at temperature ``temperature``
    (temperatures at or below ``ARGMAX_TEMPERATURE`` short-circuit to the
    argmax), optionally restricts to the ``topk`` most probable items, and
    draws once.  Deterministic given ``rng`` (an integer seed or a numpy
    generator).  With ``record_scores`` the pre-filter distribution of every
    step is kept on the returned sequence.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if temperature <= 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if topk is not None and topk < 1:
        raise ValueError("topk must be at least 1 or None")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    history = _history_array(model, history)
    banned = _initial_ban(model, history, constraints)
    prefix = history.tolist()
    items, logprobs = [], []
    step_scores = [] if record_scores else None
    for _ in range(k):
        raw = np.asarray(model.next_logits(np.array(prefix, dtype=np.int64)),
                         dtype=np.float64)
        choice, recorded = _sample_step(raw, banned, temperature, topk,
                                        rng, record_scores)
        items.append(choice)
        logprobs.append(float(_log_softmax_raw(raw)[choice]))
        if record_scores:
            step_scores.append(ScoreVector(recorded, "probabilities"))
        prefix.append(choice)
        if constraints.forbid_repeats:
            banned[choice] = True
    return GeneratedSequence(items, step_scores, logprobs)
