"""Named seed derivation.

Every random decision in the package flows from one top-level integer seed.
Sub-stages (split, parameter init, batch shuffling, per-user and per-sequence
sampling) derive their own seed with ``derive_seed(master, name)`` so each
stage is independently reproducible and parallel execution order can never
change results.
"""

import hashlib

import numpy as np

__all__ = ["derive_seed", "derived_rng"]


def derive_seed(master: int, name: str) -> int:
    """Derive a 64-bit child seed from a master seed and a stage name.

    The derivation is a SHA-256 hash of ``"{master}/{name}"``, so it is stable
    across runs, platforms, and Python versions.
    """
    digest = hashlib.sha256(f"{master}/{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derived_rng(master: int, name: str) -> np.random.Generator:
    """A fresh ``numpy`` generator seeded by ``derive_seed(master, name)``."""
    return np.random.default_rng(derive_seed(master, name))
