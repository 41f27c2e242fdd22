"""Checkpoint file format.

Layout: 8-byte magic ``GRCKPT01``, little-endian uint32 header length, a JSON
header (model config plus a tensor manifest of name / shape / byte offset),
then the raw tensor blobs: little-endian float32, row-major, in manifest
order.  ``load_checkpoint(save_checkpoint(...))`` is bit-exact.
"""

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .config import ModelConfig

__all__ = ["save_checkpoint", "load_checkpoint"]

MAGIC = b"GRCKPT01"
FORMAT_VERSION = 1


def save_checkpoint(params: dict, cfg: ModelConfig, path) -> None:
    """Write parameters and config to ``path``; parameters must be float32."""
    manifest = []
    offset = 0
    names = sorted(params)
    for name in names:
        t = params[name]
        if t.dtype != np.float32:
            raise CheckpointError(
                f"checkpoint tensors must be float32, {name} is {t.dtype}"
            )
        manifest.append({"name": name, "shape": list(t.shape), "offset": offset})
        offset += t.nbytes
    header = json.dumps(
        {"format_version": FORMAT_VERSION, "config": asdict(cfg),
         "manifest": manifest},
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for name in names:
            f.write(np.ascontiguousarray(params[name], dtype="<f4").tobytes())


def load_checkpoint(path):
    """Read a checkpoint; returns ``(params, ModelConfig)``.

    Raises :class:`CheckpointError` on bad magic, version or shape mismatch,
    or a truncated file.
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint does not exist: {path}")
    raw = path.read_bytes()
    if len(raw) < len(MAGIC) + 4 or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    (header_len,) = struct.unpack_from("<I", raw, len(MAGIC))
    header_end = len(MAGIC) + 4 + header_len
    if len(raw) < header_end:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[len(MAGIC) + 4: header_end])
    except json.JSONDecodeError as e:
        raise CheckpointError(f"{path}: corrupt header: {e}") from e
    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported format version {header.get('format_version')}"
        )
    cfg = ModelConfig(**header["config"])
    blob = raw[header_end:]
    params = {}
    for entry in header["manifest"]:
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape)) * 4 if shape else 4
        start = entry["offset"]
        if start + nbytes > len(blob):
            raise CheckpointError(f"{path}: truncated tensor {entry['name']}")
        arr = np.frombuffer(blob[start: start + nbytes], dtype="<f4")
        params[entry["name"]] = arr.reshape(shape).copy()
    _validate_shapes(params, cfg, path)
    return params, cfg


def _validate_shapes(params, cfg, path):
    from .transformer import init_parameters

    expected = init_parameters(cfg, np.random.default_rng(0))
    if set(expected) != set(params):
        missing = set(expected) ^ set(params)
        raise CheckpointError(f"{path}: tensor set mismatch: {sorted(missing)}")
    for name, t in expected.items():
        if params[name].shape != t.shape:
            raise CheckpointError(
                f"{path}: {name} has shape {params[name].shape}, "
                f"config implies {t.shape}"
            )
