"""Decoder-only transformer over item IDs, in plain numpy.

Forward pass, analytic backward pass, and the shifted cross-entropy loss are
written out explicitly so every gradient can be checked against finite
differences.  Conventions:

* pre-layer-norm residual blocks, GELU feed-forward of width 4*d;
* learned positional embeddings indexed by position within the sequence
  (padding does not shift content positions);
* the output projection is the transposed item-embedding matrix (weight
  tying, no separate output matrix);
* batches are left-padded with dense ID 0; padded keys are masked out of
  attention and padded targets out of the loss;
* parameters and activations are float32 in normal use (any float dtype
  works, which the float64 gradient checks rely on); the loss is accumulated
  in float64.

Parameters live in a flat ``dict[str, np.ndarray]`` so the optimizer,
checkpoints, and gradient checks can treat them uniformly.
"""

import math

import numpy as np
from scipy.special import erf

from ..errors import ContractViolationError, OutOfCatalogError
from .config import ModelConfig

__all__ = [
    "init_parameters",
    "forward_logits",
    "last_position_logits",
    "loss_and_gradients",
]

LN_EPS = 1e-5
MASK_VALUE = -1e30
INIT_STD = 0.02
_SQRT1_2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def init_parameters(cfg: ModelConfig, rng: np.random.Generator,
                    dtype=np.float32) -> dict:
    """Fresh parameters: normal(0, 0.02) weights, zero biases, unit LN gains."""
    d, v, l = cfg.hidden_size, cfg.vocab_size, cfg.max_seq_len

    def normal(*shape):
        return rng.normal(0.0, INIT_STD, size=shape).astype(dtype)

    p = {"tok_emb": normal(v, d), "pos_emb": normal(l, d)}
    for i in range(cfg.num_blocks):
        b = f"blocks.{i}"
        p[f"{b}.ln1.g"] = np.ones(d, dtype)
        p[f"{b}.ln1.b"] = np.zeros(d, dtype)
        p[f"{b}.attn.w_in"] = normal(d, 3 * d)
        p[f"{b}.attn.b_in"] = np.zeros(3 * d, dtype)
        p[f"{b}.attn.w_out"] = normal(d, d)
        p[f"{b}.attn.b_out"] = np.zeros(d, dtype)
        p[f"{b}.ln2.g"] = np.ones(d, dtype)
        p[f"{b}.ln2.b"] = np.zeros(d, dtype)
        p[f"{b}.mlp.w1"] = normal(d, 4 * d)
        p[f"{b}.mlp.b1"] = np.zeros(4 * d, dtype)
        p[f"{b}.mlp.w2"] = normal(4 * d, d)
        p[f"{b}.mlp.b2"] = np.zeros(d, dtype)
    p["ln_f.g"] = np.ones(d, dtype)
    p["ln_f.b"] = np.zeros(d, dtype)
    return p


# ---------------------------------------------------------------------------
# primitive layers
# ---------------------------------------------------------------------------

def _softmax_last(x):
    m = x.max(-1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(-1, keepdims=True)


def _ln_forward(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv, g)


def _ln_backward(dy, cache):
    xhat, inv, g = cache
    dxhat = dy * g
    dg = (dy * xhat).sum(axis=(0, 1))
    db = dy.sum(axis=(0, 1))
    dx = inv * (dxhat
                - dxhat.mean(-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(-1, keepdims=True))
    return dx, dg, db


def _gelu(x):
    return 0.5 * x * (1.0 + erf(x * _SQRT1_2))


def _gelu_grad(x):
    return 0.5 * (1.0 + erf(x * _SQRT1_2)) + x * np.exp(-0.5 * x * x) * _INV_SQRT_2PI


def _dropout(x, rng, rate):
    """Inverted dropout; returns (output, keep-mask scaled by 1/(1-rate))."""
    if rng is None or rate <= 0.0:
        return x, None
    scale = (rng.random(x.shape) >= rate).astype(x.dtype) * (1.0 / (1.0 - rate))
    return x * scale, scale


# ---------------------------------------------------------------------------
# full forward / backward
# ---------------------------------------------------------------------------

def _validate_ids(ids, catalog_size, allow_pad):
    ids = np.asarray(ids)
    lo = 0 if allow_pad else 1
    if ids.size == 0:
        raise ContractViolationError("empty ID array")
    mx, mn = int(ids.max()), int(ids.min())
    if mx > catalog_size or mn < lo:
        raise OutOfCatalogError(
            f"item IDs must lie in [{lo}, {catalog_size}]; got range [{mn}, {mx}]"
        )
    return ids


def _forward_hidden(params, cfg: ModelConfig, ids, dropout_rng=None):
    """Run the block stack; returns final-layer-norm output and a cache.

    ``ids``: (B, W) int array, left-padded with 0, W <= max_seq_len.
    """
    ids = _validate_ids(ids, cfg.catalog_size, allow_pad=True)
    if ids.ndim != 2:
        raise ContractViolationError("ids must be a 2-D batch")
    B, W = ids.shape
    if W > cfg.max_seq_len:
        raise ContractViolationError(
            f"batch width {W} exceeds max_seq_len {cfg.max_seq_len}"
        )
    rate = cfg.dropout_rate
    content = ids != 0
    pos = np.maximum(np.cumsum(content, axis=1) - 1, 0)

    h = params["tok_emb"][ids] + params["pos_emb"][pos]
    h, emb_mask = _dropout(h, dropout_rng, rate)

    causal = np.tril(np.ones((W, W), dtype=bool))
    allowed = causal[None, None, :, :] & content[:, None, None, :]

    H, dh = cfg.num_heads, cfg.head_dim
    inv_sqrt_dh = 1.0 / math.sqrt(dh)
    blocks = []
    for i in range(cfg.num_blocks):
        b = f"blocks.{i}"
        a, ln1_cache = _ln_forward(h, params[f"{b}.ln1.g"], params[f"{b}.ln1.b"])
        qkv = a @ params[f"{b}.attn.w_in"] + params[f"{b}.attn.b_in"]
        q, k, v = np.split(qkv, 3, axis=-1)
        q = q.reshape(B, W, H, dh).transpose(0, 2, 1, 3)
        k = k.reshape(B, W, H, dh).transpose(0, 2, 1, 3)
        v = v.reshape(B, W, H, dh).transpose(0, 2, 1, 3)
        scores = (q @ k.transpose(0, 1, 3, 2)) * inv_sqrt_dh
        scores = np.where(allowed, scores, scores.dtype.type(MASK_VALUE))
        p = _softmax_last(scores)
        p_drop, attn_mask = _dropout(p, dropout_rng, rate)
        ctx = (p_drop @ v).transpose(0, 2, 1, 3).reshape(B, W, cfg.hidden_size)
        attn_out = ctx @ params[f"{b}.attn.w_out"] + params[f"{b}.attn.b_out"]
        attn_out, attn_resid_mask = _dropout(attn_out, dropout_rng, rate)
        h = h + attn_out

        u, ln2_cache = _ln_forward(h, params[f"{b}.ln2.g"], params[f"{b}.ln2.b"])
        z1 = u @ params[f"{b}.mlp.w1"] + params[f"{b}.mlp.b1"]
        g = _gelu(z1)
        mlp_out = g @ params[f"{b}.mlp.w2"] + params[f"{b}.mlp.b2"]
        mlp_out, mlp_resid_mask = _dropout(mlp_out, dropout_rng, rate)
        h = h + mlp_out

        blocks.append({
            "ln1": ln1_cache, "a": a, "q": q, "k": k, "v": v,
            "p": p, "p_drop": p_drop, "attn_mask": attn_mask, "ctx": ctx,
            "attn_resid_mask": attn_resid_mask,
            "ln2": ln2_cache, "u": u, "z1": z1, "g": g,
            "mlp_resid_mask": mlp_resid_mask,
        })

    hf, lnf_cache = _ln_forward(h, params["ln_f.g"], params["ln_f.b"])
    cache = {
        "ids": ids, "pos": pos, "emb_mask": emb_mask,
        "blocks": blocks, "lnf": lnf_cache, "hf": hf,
        "inv_sqrt_dh": inv_sqrt_dh, "B": B, "W": W,
    }
    return hf, cache


def forward_logits(params, cfg: ModelConfig, ids, dropout_rng=None):
    """Logits over the full vocabulary at every position: (B, W, I+1)."""
    hf, cache = _forward_hidden(params, cfg, ids, dropout_rng)
    return hf @ params["tok_emb"].T, cache


def last_position_logits(params, cfg: ModelConfig, ids):
    """Inference-only logits at the last position of each row: (B, I+1).

    Rows must be left-padded so the last column holds each sequence's most
    recent item.  Dropout is always disabled here.
    """
    hf, _ = _forward_hidden(params, cfg, ids, dropout_rng=None)
    return hf[:, -1, :] @ params["tok_emb"].T


def _backward(params, cfg: ModelConfig, cache, dlogits):
    """Gradients of every parameter given d(loss)/d(logits)."""
    grads = {}
    d = cfg.hidden_size
    B, W = cache["B"], cache["W"]
    hf = cache["hf"]

    v_size = dlogits.shape[-1]
    dhf = dlogits @ params["tok_emb"]
    grads["tok_emb"] = dlogits.reshape(-1, v_size).T @ hf.reshape(-1, d)

    dh, grads["ln_f.g"], grads["ln_f.b"] = _ln_backward(dhf, cache["lnf"])

    H, dh_dim = cfg.num_heads, cfg.head_dim
    inv_sqrt_dh = cache["inv_sqrt_dh"]
    for i in reversed(range(cfg.num_blocks)):
        b = f"blocks.{i}"
        c = cache["blocks"][i]

        # feed-forward sublayer
        dmlp_out = dh if c["mlp_resid_mask"] is None else dh * c["mlp_resid_mask"]
        g2d = c["g"].reshape(-1, 4 * d)
        grads[f"{b}.mlp.w2"] = g2d.T @ dmlp_out.reshape(-1, d)
        grads[f"{b}.mlp.b2"] = dmlp_out.sum(axis=(0, 1))
        dg = dmlp_out @ params[f"{b}.mlp.w2"].T
        dz1 = dg * _gelu_grad(c["z1"])
        grads[f"{b}.mlp.w1"] = c["u"].reshape(-1, d).T @ dz1.reshape(-1, 4 * d)
        grads[f"{b}.mlp.b1"] = dz1.sum(axis=(0, 1))
        du = dz1 @ params[f"{b}.mlp.w1"].T
        dh_ln2, grads[f"{b}.ln2.g"], grads[f"{b}.ln2.b"] = _ln_backward(du, c["ln2"])
        dh = dh + dh_ln2

        # attention sublayer
        dattn_out = dh if c["attn_resid_mask"] is None else dh * c["attn_resid_mask"]
        grads[f"{b}.attn.w_out"] = c["ctx"].reshape(-1, d).T @ dattn_out.reshape(-1, d)
        grads[f"{b}.attn.b_out"] = dattn_out.sum(axis=(0, 1))
        dctx = (dattn_out @ params[f"{b}.attn.w_out"].T)
        dctx = dctx.reshape(B, W, H, dh_dim).transpose(0, 2, 1, 3)
        dp_drop = dctx @ c["v"].transpose(0, 1, 3, 2)
        dv = c["p_drop"].transpose(0, 1, 3, 2) @ dctx
        dp = dp_drop if c["attn_mask"] is None else dp_drop * c["attn_mask"]
        p = c["p"]
        ds = p * (dp - (dp * p).sum(-1, keepdims=True))
        ds = ds * inv_sqrt_dh
        dq = ds @ c["k"]
        dk = ds.transpose(0, 1, 3, 2) @ c["q"]

        def _merge(t):
            return t.transpose(0, 2, 1, 3).reshape(B, W, d)

        dqkv = np.concatenate([_merge(dq), _merge(dk), _merge(dv)], axis=-1)
        grads[f"{b}.attn.w_in"] = c["a"].reshape(-1, d).T @ dqkv.reshape(-1, 3 * d)
        grads[f"{b}.attn.b_in"] = dqkv.sum(axis=(0, 1))
        da = dqkv @ params[f"{b}.attn.w_in"].T
        dh_ln1, grads[f"{b}.ln1.g"], grads[f"{b}.ln1.b"] = _ln_backward(da, c["ln1"])
        dh = dh + dh_ln1

    if cache["emb_mask"] is not None:
        dh = dh * cache["emb_mask"]
    dtok = np.zeros_like(params["tok_emb"])
    np.add.at(dtok, cache["ids"].ravel(), dh.reshape(-1, d))
    grads["tok_emb"] = grads["tok_emb"] + dtok
    dpos = np.zeros_like(params["pos_emb"])
    np.add.at(dpos, cache["pos"].ravel(), dh.reshape(-1, d))
    grads["pos_emb"] = dpos
    return grads


def loss_and_gradients(params, cfg: ModelConfig, batch, dropout_rng=None):
    """Shifted next-item cross-entropy and its gradient for every parameter.

    ``batch``: (B, W) int array of left-padded full sequences, W <= max_seq_len.
    Each position whose input and target are both real items contributes one
    cross-entropy term; the loss is their mean, accumulated in float64.  The
    softmax runs over real items 1..I only (the padding column is excluded).

    Returns ``(loss, grads)`` with ``grads`` keyed like ``params``.
    """
    batch = np.asarray(batch)
    if batch.ndim != 2 or batch.shape[1] < 2:
        raise ContractViolationError("batch must be (B, W) with W >= 2")
    if batch.shape[1] > cfg.max_seq_len:
        raise ContractViolationError(
            f"batch width {batch.shape[1]} exceeds max_seq_len "
            f"{cfg.max_seq_len}"
        )
    inputs = batch[:, :-1]
    targets = batch[:, 1:]
    supervised = (inputs != 0) & (targets != 0)
    n_terms = int(supervised.sum())
    if n_terms == 0:
        raise ContractViolationError(
            "batch has no supervised positions (all padding)"
        )

    logits, cache = forward_logits(params, cfg, inputs, dropout_rng)
    z = logits[supervised].astype(np.float64)   # (M, I+1), 64-bit loss math
    zi = z[:, 1:]                               # exclude the padding column
    m = zi.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(zi - m).sum(axis=1, keepdims=True))
    tgt = targets[supervised]
    rows = np.arange(n_terms)
    logp = z[rows, tgt] - lse[:, 0]
    loss = -np.sum(logp, dtype=np.float64) / n_terms

    probs = np.exp(zi - lse)
    dsel = np.zeros_like(z)
    dsel[:, 1:] = probs / n_terms
    dsel[rows, tgt] -= 1.0 / n_terms
    dlogits = np.zeros_like(logits)
    dlogits[supervised] = dsel.astype(logits.dtype)
    grads = _backward(params, cfg, cache, dlogits)
    return float(loss), grads
