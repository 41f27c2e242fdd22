"""Offline evaluation: run strategy descriptors over held-out users.

A strategy descriptor names one way to produce a Top-K list (``name`` plus
its parameters); the evaluator runs every descriptor for every user of the
chosen split, computes NDCG@K / Recall@K / MAP@K and the per-position hit
curve, keeps the per-user metric vectors for paired t-tests against the
first (baseline) descriptor, and records wall-clock timings.

Per-user work is independent: user u's sampling seed derives from
``(seed, label, u)``, and results are reduced in dense user order, so the
report is byte-identical for any worker count.  Timings are inherently
non-deterministic and therefore serialize to a separate file.
"""

import json
import time
from dataclasses import dataclass, field
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from .aggregate import AggregationConfig, aggregate_recommend
from .decode import (
    DEFAULT_CONSTRAINTS,
    GenerationConstraints,
    beam_search,
    greedy_decode,
    positional_list,
    temperature_sample,
    topk_prediction,
)
from .errors import ConfigError
from .metrics import (
    hitrate_by_position,
    map_at_k,
    ndcg_at_k,
    paired_ttest,
    recall_at_k,
)
from .seeds import derive_seed

__all__ = [
    "StrategyDescriptor",
    "recommend",
    "EvalReport",
    "StrategyResult",
    "evaluate_split",
    "save_report",
    "load_report",
    "report_json_text",
]

STRATEGY_NAMES = ("topk_prediction", "greedy", "beam", "temperature",
                  "rra", "ra")


@dataclass
class StrategyDescriptor:
    """One named recommendation strategy with its parameters.

    ``constraints`` tunes history/repeat masking for the single-sequence
    strategies (both forbidden by default); the aggregation strategies pin
    their own constraint handling and reject the field.
    """

    name: str
    K: int = 10
    B: int | None = None          # beam width
    T: float | None = None        # sampling temperature
    topk: int | None = None       # top-k filter for sampling / RRA
    S: int | None = None          # number of sequences to aggregate
    constraints: GenerationConstraints | None = None
    label: str = ""

    def __post_init__(self):
        if self.name not in STRATEGY_NAMES:
            raise ConfigError(f"unknown strategy name {self.name!r}")
        if self.name == "beam" and (self.B is None or self.B < 1):
            raise ConfigError("beam strategy needs a beam width B >= 1")
        if self.name in ("temperature", "rra", "ra"):
            if self.T is None or self.T <= 0:
                raise ConfigError(f"{self.name} strategy needs a temperature T > 0")
        if self.name in ("rra", "ra"):
            if self.S is None or self.S < 1:
                raise ConfigError(f"{self.name} strategy needs S >= 1 sequences")
            if self.constraints is not None:
                raise ConfigError(
                    f"{self.name} defines its own constraints; "
                    "the field only applies to single-sequence strategies"
                )
        if isinstance(self.constraints, dict):
            self.constraints = GenerationConstraints(**self.constraints)
        if not self.label:
            parts = []
            for key in ("B", "T", "topk", "S"):
                value = getattr(self, key)
                if value is not None:
                    parts.append(f"{key}={value:g}" if isinstance(value, float)
                                 else f"{key}={value}")
            if self.constraints is not None:
                parts.append(f"fh={int(self.constraints.forbid_history)}")
                parts.append(f"fr={int(self.constraints.forbid_repeats)}")
            self.label = self.name + (f"[{','.join(parts)}]" if parts else "")

    @classmethod
    def from_dict(cls, d: dict) -> "StrategyDescriptor":
        d = dict(d)
        name = d.pop("name", None)
        if name is None:
            raise ConfigError("strategy descriptor is missing 'name'")
        allowed = {"K", "B", "T", "topk", "S", "label", "constraints"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown strategy fields: {sorted(unknown)}")
        return cls(name=name, **d)


def recommend(model, history, desc: StrategyDescriptor, seed: int = 0):
    """Produce one user's ranked list with the described strategy."""
    constraints = desc.constraints or DEFAULT_CONSTRAINTS
    if desc.name == "topk_prediction":
        return topk_prediction(model, history, desc.K, constraints)
    if desc.name == "greedy":
        return positional_list(greedy_decode(model, history, desc.K,
                                             constraints))
    if desc.name == "beam":
        return positional_list(beam_search(model, history, desc.K, desc.B,
                                           constraints))
    if desc.name == "temperature":
        seq = temperature_sample(model, history, desc.K, desc.T,
                                 topk=desc.topk, rng=seed,
                                 constraints=constraints)
        return positional_list(seq)
    cfg = AggregationConfig(strategy=desc.name, num_sequences=desc.S,
                            horizon=desc.K, temperature=desc.T,
                            topk=desc.topk, seed=seed)
    return aggregate_recommend(model, history, cfg)


# ---------------------------------------------------------------------------
# report containers
# ---------------------------------------------------------------------------

@dataclass
class StrategyResult:
    label: str
    metrics: dict                  # metric name -> mean over users
    hitrate_curve: list            # length n_holdout
    per_user: dict                 # metric name -> list of per-user values
    mean_seconds_per_user: float = 0.0


@dataclass
class EvalReport:
    split: str
    k: int
    n_holdout: int
    seed: int
    users: list
    strategies: list
    significance: dict = field(default_factory=dict)
    total_seconds: float = 0.0

    def result(self, label: str) -> StrategyResult:
        for s in self.strategies:
            if s.label == label:
                return s
        raise KeyError(label)


def _metric_names(k):
    return (f"ndcg@{k}", f"recall@{k}", f"map@{k}")


# worker globals, set once per process by the pool initializer
_CTX = {}


def _init_worker(model, descriptors, histories, gts, k, seed):
    _CTX.update(model=model, descriptors=descriptors, histories=histories,
                gts=gts, k=k, seed=seed)


def _run_user(u: int):
    model, descriptors = _CTX["model"], _CTX["descriptors"]
    history = _CTX["histories"][u]
    gt_list = _CTX["gts"][u]
    gt_set = set(int(g) for g in gt_list)
    k, seed = _CTX["k"], _CTX["seed"]
    out = []
    for desc in descriptors:
        t0 = time.perf_counter()
        recs = recommend(model, history, desc,
                         seed=derive_seed(seed, f"{desc.label}/user{u}"))
        elapsed = time.perf_counter() - t0
        items = recs.items
        out.append((
            ndcg_at_k(items, gt_set, k),
            recall_at_k(items, gt_set, k),
            map_at_k(items, gt_set, k),
            hitrate_by_position(items, gt_list, k),
            elapsed,
        ))
    return out


def evaluate_split(model, dataset, descriptors, split_name: str = "test",
                   k: int = 10, seed: int = 0, workers: int = 1,
                   max_users: int | None = None) -> EvalReport:
    """Evaluate every descriptor over the users of one split.

    ``workers`` > 1 distributes users over processes; the result is
    byte-identical to a single-worker run because per-user seeds are derived
    from the user index and reduction order is fixed.
    """
    if not descriptors:
        raise ConfigError("no strategies to evaluate")
    users = dataset.users_of(split_name)
    if max_users is not None:
        users = users[:max_users]
    if users.size == 0:
        raise ConfigError(f"split {split_name!r} has no users")
    histories = {int(u): dataset.train_sequences[u] for u in users}
    gts = {int(u): dataset.ground_truth[u] for u in users}

    t_start = time.perf_counter()
    if workers > 1:
        ctx = get_context("fork")
        with ctx.Pool(workers, initializer=_init_worker,
                      initargs=(model, descriptors, histories, gts, k, seed)
                      ) as pool:
            rows = pool.map(_run_user, [int(u) for u in users], chunksize=16)
    else:
        _init_worker(model, descriptors, histories, gts, k, seed)
        rows = [_run_user(int(u)) for u in users]
    total_seconds = time.perf_counter() - t_start

    names = _metric_names(k)
    strategies = []
    for j, desc in enumerate(descriptors):
        per_user = {name: [row[j][i] for row in rows]
                    for i, name in enumerate(names)}
        curve = np.mean(np.stack([row[j][3] for row in rows]), axis=0)
        elapsed = float(np.sum([row[j][4] for row in rows]))
        strategies.append(StrategyResult(
            label=desc.label,
            metrics={name: float(np.mean(per_user[name], dtype=np.float64))
                     for name in names},
            hitrate_curve=[float(x) for x in curve],
            per_user=per_user,
            mean_seconds_per_user=elapsed / len(users),
        ))

    significance = {}
    base = strategies[0]
    for s in strategies[1:]:
        tests = {}
        for name in names:
            tt = paired_ttest(s.per_user[name], base.per_user[name])
            tests[name] = {"t": tt.statistic, "p": tt.pvalue,
                           "degenerate": tt.degenerate}
        significance[s.label] = {"baseline": base.label, "tests": tests}

    return EvalReport(
        split=split_name, k=k, n_holdout=len(dataset.ground_truth[users[0]]),
        seed=seed, users=[int(u) for u in users], strategies=strategies,
        significance=significance, total_seconds=total_seconds,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def report_json_text(report: EvalReport) -> str:
    """Deterministic JSON rendering (timings excluded; they go elsewhere)."""
    doc = {
        "schema_version": 1,
        "split": report.split,
        "k": report.k,
        "n_holdout": report.n_holdout,
        "seed": report.seed,
        "users": report.users,
        "strategies": [
            {
                "label": s.label,
                "metrics": s.metrics,
                "hitrate_by_position": s.hitrate_curve,
                "per_user": s.per_user,
            }
            for s in report.strategies
        ],
        "significance": report.significance,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def save_report(report: EvalReport, directory) -> None:
    """Write report.json, flat CSV tables, and timings.json into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "report.json").write_text(report_json_text(report))

    lines = ["strategy,metric,value"]
    for s in report.strategies:
        for name, value in sorted(s.metrics.items()):
            lines.append(f"{s.label},{name},{value!r}")
    (directory / "metrics.csv").write_text("\n".join(lines) + "\n")

    lines = ["strategy,position,hitrate"]
    for s in report.strategies:
        for p, value in enumerate(s.hitrate_curve, start=1):
            lines.append(f"{s.label},{p},{value!r}")
    (directory / "positions.csv").write_text("\n".join(lines) + "\n")

    timings = {
        "total_seconds": report.total_seconds,
        "per_strategy_mean_seconds_per_user": {
            s.label: s.mean_seconds_per_user for s in report.strategies
        },
    }
    (directory / "timings.json").write_text(
        json.dumps(timings, sort_keys=True, indent=2) + "\n")


def load_report(path) -> EvalReport:
    """Parse a report.json back into an :class:`EvalReport` (no timings)."""
    doc = json.loads(Path(path).read_text())
    strategies = [
        StrategyResult(
            label=s["label"],
            metrics=s["metrics"],
            hitrate_curve=s["hitrate_by_position"],
            per_user=s["per_user"],
        )
        for s in doc["strategies"]
    ]
    return EvalReport(
        split=doc["split"], k=doc["k"], n_holdout=doc["n_holdout"],
        seed=doc["seed"], users=doc["users"], strategies=strategies,
        significance=doc["significance"],
    )
