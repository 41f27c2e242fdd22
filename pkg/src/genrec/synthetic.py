"""Synthetic interaction corpora with known dynamics.

Two families cover the test and demo needs: a deterministic cycle (item i is
always followed by i+1), which any competent sequence model must learn
nearly perfectly, and a mixture of sharp Markov behaviours, which rewards
strategies that marginalize over uncertain futures.  Generators can emit
dense sequences, ingestion-ready events, or a CSV file, so the same corpus
can exercise any pipeline stage.
"""

import csv
from pathlib import Path

import numpy as np

from .data import Catalog, InteractionLog, RawEvent

__all__ = [
    "cycle_sequences",
    "behavior_matrix",
    "markov_mixture_sequences",
    "log_from_sequences",
    "sequences_to_events",
    "write_events_csv",
]


def cycle_sequences(item_count: int, n_users: int, seq_len: int,
                    seed: int = 0) -> list:
    """Each user starts at a random item and follows i -> i+1 (wrapping)."""
    rng = np.random.default_rng(seed)
    starts = rng.integers(0, item_count, size=n_users)
    steps = np.arange(seq_len)
    return [np.int32((start + steps) % item_count + 1) for start in starts]


def behavior_matrix(item_count: int, rng, successors: int = 4,
                    weights=(0.55, 0.25, 0.15, 0.05)) -> np.ndarray:
    """Random sharp transition matrix: each item has a few likely successors."""
    if successors != len(weights):
        raise ValueError("need one weight per successor")
    m = np.zeros((item_count + 1, item_count + 1))
    for i in range(1, item_count + 1):
        succ = rng.choice(item_count, size=successors, replace=False) + 1
        m[i, succ] = weights
    m[0, 1:] = 1.0 / item_count
    return m


def markov_mixture_sequences(item_count: int, n_users: int, seq_len: int,
                             n_behaviors: int = 3, seed: int = 0):
    """Users follow one of several random Markov behaviours.

    Returns ``(sequences, matrices, assignment)`` where ``assignment[u]`` is
    the behaviour index of user u.
    """
    rng = np.random.default_rng(seed)
    matrices = [behavior_matrix(item_count, rng) for _ in range(n_behaviors)]
    assignment = rng.integers(0, n_behaviors, size=n_users)
    sequences = []
    for u in range(n_users):
        m = matrices[assignment[u]]
        seq = np.empty(seq_len, dtype=np.int32)
        cur = int(rng.integers(1, item_count + 1))
        seq[0] = cur
        for t in range(1, seq_len):
            cur = int(rng.choice(item_count + 1, p=m[cur]))
            seq[t] = cur
        sequences.append(seq)
    return sequences, matrices, assignment


def log_from_sequences(sequences, item_count: int) -> InteractionLog:
    """Wrap dense sequences in an interaction log with a trivial catalog."""
    catalog = Catalog(
        item_ids=[""] + [f"i{k}" for k in range(1, item_count + 1)],
        user_ids=[f"u{u}" for u in range(len(sequences))],
    )
    return InteractionLog(catalog,
                          [np.asarray(s, dtype=np.int32) for s in sequences])


def sequences_to_events(sequences) -> list:
    """Flatten dense sequences into ingestion-ready events (ts = position)."""
    events = []
    for u, seq in enumerate(sequences):
        for t, item in enumerate(seq):
            events.append(RawEvent(f"u{u}", f"i{int(item)}", t))
    return events


def write_events_csv(events, path) -> None:
    """Write events as a ``user,item,ts`` CSV with header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["user", "item", "ts"])
        for e in events:
            w.writerow([e.user, e.item, e.timestamp])
