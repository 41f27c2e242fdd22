"""Run configuration: one JSON document drives every pipeline stage.

Every setting has a default matching the standard training recipe (batch 64,
Adam at 1e-3, dropout 0.1, two blocks, one head, max length 128, top-k 10,
S = 30), so a minimal config only needs the dataset path.  One top-level
``seed`` fans out to the split / training / evaluation stages by named
derivation.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import FileFormat
from .errors import ConfigError
from .evaluate import StrategyDescriptor
from .seeds import derive_seed

__all__ = ["RunConfig", "DatasetConfig", "load_config"]


def _take(d: dict, cls_name: str, allowed: dict):
    """Pop known keys with defaults; reject unknown ones."""
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {cls_name} fields: {sorted(unknown)}")
    return {k: d.get(k, default) for k, default in allowed.items()}


@dataclass
class DatasetConfig:
    path: str = ""
    format: FileFormat = field(default_factory=FileFormat)
    min_user_len: int = 20
    min_item_count: int = 5
    drop_repeated_items: bool = False
    n_holdout: int = 10
    val_fraction: float = 0.5

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetConfig":
        d = dict(d)
        fmt = d.pop("format", {})
        fields = _take(d, "dataset", {
            "path": "", "min_user_len": 20, "min_item_count": 5,
            "drop_repeated_items": False, "n_holdout": 10,
            "val_fraction": 0.5,
        })
        fmt_fields = _take(dict(fmt), "dataset.format", {
            "user_col": "user", "item_col": "item", "time_col": "ts",
            "delimiter": ",", "header": True,
        })
        return cls(format=FileFormat(**fmt_fields), **fields)


@dataclass
class RunConfig:
    seed: int = 42
    out: str = "runs/default"
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    model: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    strategies: list = field(default_factory=list)
    eval: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    bundle: str = ""
    checkpoint: str = ""

    def __post_init__(self):
        self.bundle = self.bundle or str(Path(self.out) / "bundle")
        self.checkpoint = self.checkpoint or str(Path(self.out) / "model.ckpt")

    # named seed fan-out
    @property
    def split_seed(self) -> int:
        return derive_seed(self.seed, "split")

    @property
    def train_seed(self) -> int:
        return derive_seed(self.seed, "train")

    @property
    def eval_seed(self) -> int:
        return derive_seed(self.seed, "eval")

    def model_fields(self) -> dict:
        return _take(dict(self.model), "model", {
            "hidden_size": 64, "num_blocks": 2, "num_heads": 1,
            "dropout_rate": 0.1, "max_seq_len": 128,
        })

    def train_fields(self) -> dict:
        return _take(dict(self.train), "train", {
            "batch_size": 64, "learning_rate": 1e-3, "max_epochs": 100,
            "patience": 5,
        })

    def eval_fields(self) -> dict:
        return _take(dict(self.eval), "eval", {
            "k": 10, "workers": 1, "split": "test", "max_users": None,
        })

    def timing_fields(self) -> dict:
        return _take(dict(self.timing), "timing", {
            "s_grid": [1, 5, 10, 30], "max_users": 50,
        })

    def descriptors(self) -> list:
        if not self.strategies:
            raise ConfigError("config lists no strategies")
        return [StrategyDescriptor.from_dict(d) for d in self.strategies]

    def sweep_fields(self) -> dict:
        if not self.sweep:
            raise ConfigError("config has no sweep section")
        d = dict(self.sweep)
        fields = _take(d, "sweep", {"strategy": None, "grid": None})
        if not isinstance(fields["strategy"], dict):
            raise ConfigError("sweep.strategy must be a strategy descriptor")
        if not isinstance(fields["grid"], dict) or not fields["grid"]:
            raise ConfigError("sweep.grid must map parameter names to value lists")
        return fields


def load_config(path, seed_override=None, out_override=None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file does not exist: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    doc = dict(doc)
    dataset = DatasetConfig.from_dict(doc.pop("dataset", {}))
    fields = _take(doc, "config", {
        "seed": 42, "out": "runs/default", "model": {}, "train": {},
        "strategies": [], "eval": {}, "sweep": {}, "timing": {},
        "bundle": "", "checkpoint": "",
    })
    if seed_override is not None:
        fields["seed"] = seed_override
    if out_override is not None:
        fields["out"] = out_override
    return RunConfig(dataset=dataset, **fields)
