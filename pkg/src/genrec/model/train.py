"""From-scratch training loop: Adam, epoch batching, early stopping.

Training is deterministic given ``TrainConfig.seed``: parameter init, batch
shuffling, and dropout each consume their own derived generator, and Adam
updates run in sorted parameter order.  After every epoch the validation
NDCG@10 of the one-pass Top-K prediction strategy is computed (generation
during training would be orders of magnitude costlier); the best-epoch
parameters are returned once the metric stops improving for ``patience``
epochs.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolationError, TrainingDivergedError
from ..metrics import ndcg_at_k
from ..seeds import derived_rng
from .config import ModelConfig, TrainConfig
from .transformer import init_parameters, last_position_logits, loss_and_gradients

__all__ = ["Adam", "EarlyStopper", "EpochStats", "TrainResult", "train_model",
           "validation_ndcg"]


class Adam:
    """Standard Adam with bias correction; updates in sorted name order."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        self.t += 1
        bc1 = 1.0 - self.b1 ** self.t
        bc2 = 1.0 - self.b2 ** self.t
        for name in sorted(params):
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * (g * g)
            params[name] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


class EarlyStopper:
    """Stop once the metric fails to strictly improve ``patience`` times."""

    def __init__(self, patience: int):
        if patience < 1:
            raise ValueError("patience must be at least 1")
        self.patience = patience
        self.best = -np.inf
        self.strikes = 0
        self.improved = False

    def update(self, metric: float) -> bool:
        """Record one epoch's metric; returns True when training should stop."""
        self.improved = metric > self.best
        if self.improved:
            self.best = metric
            self.strikes = 0
            return False
        self.strikes += 1
        return self.strikes >= self.patience


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_ndcg: float


@dataclass
class TrainResult:
    params: dict
    config: ModelConfig
    best_epoch: int
    history: list = field(default_factory=list)


def _pad_batch(seqs):
    width = max(s.size for s in seqs)
    out = np.zeros((len(seqs), width), dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, width - s.size:] = s
    return out


def validation_ndcg(params, mcfg: ModelConfig, histories, ground_truths,
                    k: int = 10, chunk: int = 256) -> float:
    """Mean NDCG@k of the Top-K prediction strategy over validation users.

    Batched: one forward per ``chunk`` users, history items masked from the
    ranking, ties broken by ascending item ID.
    """
    lim = mcfg.max_seq_len
    vals = []
    for start in range(0, len(histories), chunk):
        hs = histories[start: start + chunk]
        ids = _pad_batch([h[-lim:] for h in hs])
        logits = last_position_logits(params, mcfg, ids).astype(np.float64)
        logits[:, 0] = -np.inf
        for row, hist, gt in zip(logits, hs, ground_truths[start: start + chunk]):
            row[hist] = -np.inf
            order = np.lexsort((np.arange(row.size), -row))
            top = order[np.isfinite(row[order])][:k]
            vals.append(ndcg_at_k(top, set(gt.tolist()), k))
    return float(np.mean(vals)) if vals else 0.0


def train_model(split, mcfg: ModelConfig, tcfg: TrainConfig) -> TrainResult:
    """Train a transformer on the split's train sequences.

    Each user contributes one example per epoch: their most recent
    ``max_seq_len`` training items, left-padded within the batch.  Stops on
    early stopping or ``max_epochs``; returns the best-epoch parameters and
    the per-epoch history.  Raises :class:`TrainingDivergedError` if the
    loss turns non-finite.
    """
    train_seqs = [s for s in split.train_sequences if s.size >= 2]
    if not train_seqs:
        raise ContractViolationError("no trainable sequences (all too short)")
    val_idx = np.flatnonzero(split.is_validation)
    if val_idx.size == 0:
        raise ContractViolationError("split has no validation users")
    val_hist = [split.train_sequences[u] for u in val_idx]
    val_gt = [split.ground_truth[u] for u in val_idx]

    params = init_parameters(mcfg, derived_rng(tcfg.seed, "init"))
    opt = Adam(params, tcfg.learning_rate, tcfg.adam_beta1, tcfg.adam_beta2,
               tcfg.adam_eps)
    shuffle_rng = derived_rng(tcfg.seed, "shuffle")
    dropout_rng = derived_rng(tcfg.seed, "dropout")
    use_dropout = mcfg.dropout_rate > 0.0

    lim = mcfg.max_seq_len
    stopper = EarlyStopper(tcfg.patience)
    best_params = None
    best_epoch = 0
    history = []
    for epoch in range(1, tcfg.max_epochs + 1):
        order = shuffle_rng.permutation(len(train_seqs))
        total_nll = 0.0
        total_terms = 0
        for start in range(0, order.size, tcfg.batch_size):
            rows = [train_seqs[i][-lim:] for i in order[start: start + tcfg.batch_size]]
            batch = _pad_batch(rows)
            loss, grads = loss_and_gradients(
                params, mcfg, batch, dropout_rng if use_dropout else None)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss {loss} at epoch {epoch}, "
                    f"batch starting at {start}"
                )
            n_terms = int(((batch[:, :-1] != 0) & (batch[:, 1:] != 0)).sum())
            total_nll += loss * n_terms
            total_terms += n_terms
            opt.step(params, grads)

        val = validation_ndcg(params, mcfg, val_hist, val_gt, k=tcfg.eval_k)
        history.append(EpochStats(epoch, total_nll / total_terms, val))
        stop = stopper.update(val)
        if stopper.improved:
            best_params = {k: v.copy() for k, v in params.items()}
            best_epoch = epoch
        if stop:
            break
    return TrainResult(best_params, mcfg, best_epoch, history)
