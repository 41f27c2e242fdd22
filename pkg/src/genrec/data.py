"""Interaction data: ingestion, preprocessing, ID spaces, splits, bundles.

The pipeline is ``ingest -> preprocess -> split``:

* ingestion reads delimiter-separated event files into (user, item,
  timestamp) records, order preserved;
* preprocessing alternates the min-item-count and min-user-length filters
  until both hold simultaneously (one pass can leave violations), then
  assigns dense IDs: users by first appearance in the input, items by first
  appearance in the canonical event order (user, timestamp, input order).
  Dense item ID 0 is reserved for padding.  Repeated (user, item) events are
  kept by default; ``drop_repeated_items`` keeps only the chronologically
  first;
* splitting holds out each user's last ``n_holdout`` items as evaluation
  ground truth and labels each user validation or test by an independent
  seeded coin flip.

Everything is a pure function of its inputs (plus the explicit seed), so
reruns are byte-identical and calls are safe from concurrent workers.  A
preprocessed dataset can be stored as an on-disk bundle: a JSON metadata
document plus flat little-endian int32 arrays of item IDs and per-user
offsets.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import pandas as pd

from .errors import EmptyDatasetError, IngestionError, SplitError

__all__ = [
    "RawEvent",
    "FileFormat",
    "Catalog",
    "InteractionLog",
    "DatasetStats",
    "SplitDataset",
    "ingest",
    "load_events_frame",
    "preprocess",
    "compute_stats",
    "split",
    "save_bundle",
    "load_bundle",
]

BUNDLE_VERSION = 1


class RawEvent(NamedTuple):
    """One interaction record; presence of the event is the implicit feedback."""

    user: str
    item: str
    timestamp: int


@dataclass
class FileFormat:
    """Where to find the user/item/timestamp columns of an event file.

    Columns are referenced by name when the file has a header, by 0-based
    position otherwise.
    """

    user_col: object = "user"
    item_col: object = "item"
    time_col: object = "ts"
    delimiter: str = ","
    header: bool = True


@dataclass
class Catalog:
    """Bijections between raw IDs and dense IDs.

    Dense item IDs run 1..I (0 is the padding token); dense user IDs run
    0..U-1.  ``item_ids[k]`` is the raw ID of dense item k (index 0 unused).
    """

    item_ids: list
    user_ids: list
    item_index: dict = field(init=False, repr=False)
    user_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.item_index = {raw: k for k, raw in enumerate(self.item_ids) if k > 0}
        self.user_index = {raw: k for k, raw in enumerate(self.user_ids)}

    @property
    def item_count(self) -> int:
        return len(self.item_ids) - 1

    @property
    def user_count(self) -> int:
        return len(self.user_ids)


@dataclass
class InteractionLog:
    """Per-user chronological dense-item sequences plus the catalog."""

    catalog: Catalog
    sequences: list

    @property
    def interaction_count(self) -> int:
        return int(sum(s.size for s in self.sequences))


@dataclass
class DatasetStats:
    users: int
    items: int
    interactions: int
    avg_length: float
    density: float

    def table(self) -> str:
        """Single-row statistics table (density as a percentage)."""
        header = f"{'users':>10} {'items':>10} {'interactions':>14} " \
                 f"{'avg_length':>11} {'density':>9}"
        row = f"{self.users:>10d} {self.items:>10d} {self.interactions:>14d} " \
              f"{self.avg_length:>11.1f} {self.density * 100:>8.4g}%"
        return header + "\n" + row


@dataclass
class SplitDataset:
    """Leave-last-N split: train prefixes, held-out ground truth, user labels."""

    catalog: Catalog
    train_sequences: list
    ground_truth: list
    is_validation: np.ndarray
    n_holdout: int
    val_fraction: float
    seed: int

    @property
    def user_count(self) -> int:
        return len(self.train_sequences)

    def users_of(self, split_name: str) -> np.ndarray:
        """Dense user IDs belonging to ``"validation"`` or ``"test"``."""
        if split_name not in ("validation", "test"):
            raise ValueError(f"unknown split {split_name!r}")
        mask = self.is_validation if split_name == "validation" \
            else ~self.is_validation
        return np.flatnonzero(mask)


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def load_events_frame(path, fmt: FileFormat = FileFormat()) -> pd.DataFrame:
    """Read an event file into a ``(user, item, ts)`` frame, order preserved.

    This is the columnar fast path behind :func:`ingest`; large files should
    be preprocessed directly from the frame.
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"input file does not exist: {path}")
    try:
        df = pd.read_csv(path, sep=fmt.delimiter,
                         header=0 if fmt.header else None)
    except Exception as e:
        raise IngestionError(f"cannot parse {path}: {e}") from e
    out = pd.DataFrame()
    for name, col in (("user", fmt.user_col), ("item", fmt.item_col),
                      ("ts", fmt.time_col)):
        if col not in df.columns:
            raise IngestionError(f"missing column {col!r} in {path}")
        out[name] = df[col]
    ts = pd.to_numeric(out["ts"], errors="coerce")
    bad = np.flatnonzero(ts.isna().to_numpy())
    if bad.size:
        raise IngestionError(
            f"unparsable timestamp at data row {bad[0] + 1}: "
            f"{out['ts'].iloc[bad[0]]!r}"
        )
    nonint = np.flatnonzero((ts != np.floor(ts)).to_numpy())
    if nonint.size:
        raise IngestionError(
            f"non-integer timestamp at data row {nonint[0] + 1}: "
            f"{out['ts'].iloc[nonint[0]]!r}"
        )
    out["ts"] = ts.astype(np.int64)
    return out


def ingest(path, fmt: FileFormat = FileFormat()) -> list:
    """Read an event file into a list of :class:`RawEvent`, order preserved."""
    df = load_events_frame(path, fmt)
    return [RawEvent(str(u), str(i), int(t))
            for u, i, t in zip(df["user"], df["item"], df["ts"])]


# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------

def _events_to_frame(events) -> pd.DataFrame:
    if isinstance(events, pd.DataFrame):
        return events.reset_index(drop=True)
    return pd.DataFrame(events, columns=["user", "item", "ts"])


def preprocess(events, min_user_len: int = 20, min_item_count: int = 5,
               drop_repeated_items: bool = False) -> InteractionLog:
    """Filter raw events and build the dense-ID interaction log.

    Alternates dropping items with fewer than ``min_item_count`` events and
    users with fewer than ``min_user_len`` events until both constraints
    hold simultaneously.  Within a user, events sort by (timestamp, input
    order).  Raises :class:`EmptyDatasetError` if nothing survives.
    """
    if min_user_len < 1 or min_item_count < 1:
        raise ValueError("min_user_len and min_item_count must be at least 1")
    df = _events_to_frame(events)
    df = df.assign(row=np.arange(len(df)))

    if drop_repeated_items:
        df = df.sort_values(["ts", "row"], kind="stable")
        df = df.drop_duplicates(subset=["user", "item"], keep="first")
        df = df.sort_values("row", kind="stable")

    while True:
        changed = False
        counts = df["item"].value_counts()
        rare = counts[counts < min_item_count]
        if len(rare):
            df = df[~df["item"].isin(rare.index)]
            changed = True
        lengths = df["user"].value_counts()
        short = lengths[lengths < min_user_len]
        if len(short):
            df = df[~df["user"].isin(short.index)]
            changed = True
        if not changed:
            break
    if df.empty:
        raise EmptyDatasetError(
            f"no events left after filtering (min_user_len={min_user_len}, "
            f"min_item_count={min_item_count})"
        )

    user_codes, user_uniques = pd.factorize(df["user"])
    df = df.assign(ucode=user_codes)
    df = df.sort_values(["ucode", "ts", "row"], kind="stable")
    item_codes, item_uniques = pd.factorize(df["item"])
    dense_items = (item_codes + 1).astype(np.int32)

    boundaries = np.flatnonzero(np.diff(df["ucode"].to_numpy())) + 1
    sequences = [np.ascontiguousarray(s)
                 for s in np.split(dense_items, boundaries)]
    catalog = Catalog(
        item_ids=[""] + [str(x) for x in item_uniques],
        user_ids=[str(x) for x in user_uniques],
    )
    return InteractionLog(catalog, sequences)


def compute_stats(log: InteractionLog) -> DatasetStats:
    users = log.catalog.user_count
    items = log.catalog.item_count
    n = log.interaction_count
    return DatasetStats(users, items, n, n / users, n / (users * items))


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------

def split(log: InteractionLog, n_holdout: int = 10, val_fraction: float = 0.5,
          seed: int = 0) -> SplitDataset:
    """Hold out each user's last ``n_holdout`` items; label users by coin flip.

    Users are assigned to validation with probability ``val_fraction`` via a
    generator seeded with ``seed`` (the rest are test users).  Raises
    :class:`SplitError` if any user's sequence is not longer than
    ``n_holdout``.
    """
    if n_holdout < 1:
        raise ValueError("n_holdout must be at least 1")
    if not 0.0 <= val_fraction <= 1.0:
        raise ValueError("val_fraction must lie in [0, 1]")
    for u, seq in enumerate(log.sequences):
        if seq.size <= n_holdout:
            raise SplitError(
                f"user {log.catalog.user_ids[u]!r} has {seq.size} events, "
                f"not enough to hold out {n_holdout}"
            )
    rng = np.random.default_rng(seed)
    is_val = rng.random(len(log.sequences)) < val_fraction
    return SplitDataset(
        catalog=log.catalog,
        train_sequences=[s[:-n_holdout] for s in log.sequences],
        ground_truth=[s[-n_holdout:] for s in log.sequences],
        is_validation=is_val,
        n_holdout=n_holdout,
        val_fraction=val_fraction,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# on-disk bundle
# ---------------------------------------------------------------------------

def save_bundle(log: InteractionLog, directory, extra_meta: dict = None) -> None:
    """Write a dataset bundle: metadata.json + sequences.bin + offsets.bin.

    ``sequences.bin`` holds all dense item IDs back to back (little-endian
    int32, users in dense order); ``offsets.bin`` holds U+1 int32 element
    offsets delimiting each user's slice.  Writing is deterministic, so
    rerunning with identical inputs reproduces identical bytes.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stats = compute_stats(log)
    meta = {
        "format_version": BUNDLE_VERSION,
        "counts": {
            "users": stats.users,
            "items": stats.items,
            "interactions": stats.interactions,
        },
        "stats": {"avg_length": stats.avg_length, "density": stats.density},
        "item_ids": log.catalog.item_ids[1:],
        "user_ids": log.catalog.user_ids,
    }
    if extra_meta:
        meta.update(extra_meta)
    flat = (np.concatenate(log.sequences) if log.sequences
            else np.zeros(0, dtype=np.int32))
    sizes = np.array([s.size for s in log.sequences], dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    (directory / "metadata.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n")
    (directory / "sequences.bin").write_bytes(
        flat.astype("<i4").tobytes())
    (directory / "offsets.bin").write_bytes(
        offsets.astype("<i4").tobytes())


def load_bundle(directory):
    """Read a bundle written by :func:`save_bundle`; returns (log, metadata)."""
    directory = Path(directory)
    meta_path = directory / "metadata.json"
    if not meta_path.exists():
        raise IngestionError(f"not a dataset bundle: {directory}")
    meta = json.loads(meta_path.read_text())
    if meta.get("format_version") != BUNDLE_VERSION:
        raise IngestionError(
            f"unsupported bundle version {meta.get('format_version')}"
        )
    flat = np.frombuffer((directory / "sequences.bin").read_bytes(),
                         dtype="<i4")
    offsets = np.frombuffer((directory / "offsets.bin").read_bytes(),
                            dtype="<i4")
    sequences = [flat[offsets[i]: offsets[i + 1]].copy()
                 for i in range(offsets.size - 1)]
    catalog = Catalog(item_ids=[""] + list(meta["item_ids"]),
                      user_ids=list(meta["user_ids"]))
    log = InteractionLog(catalog, sequences)
    if log.interaction_count != meta["counts"]["interactions"]:
        raise IngestionError(f"bundle {directory} is corrupt: count mismatch")
    return log, meta
