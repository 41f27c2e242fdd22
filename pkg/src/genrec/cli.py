"""Command-line experiment runner.

Subcommands: ``preprocess``, ``train``, ``evaluate``, ``sweep``, ``timing``.
Every command reads one JSON config (see :mod:`genrec.runconfig`), is
idempotent given identical config and seed, and exits 0 on success.  On
failure a single machine-parsable line ``error:<category>: <message>`` is
printed to stderr and the exit code encodes the category (config=2, data=3,
train=4, internal=1).
"""

import argparse
import itertools
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

from .data import compute_stats, load_bundle, load_events_frame, preprocess, split
from .errors import ConfigError, GenrecError
from .evaluate import StrategyDescriptor, evaluate_split, recommend, save_report
from .model import (
    ModelConfig,
    TrainConfig,
    TransformerModel,
    load_checkpoint,
    save_checkpoint,
    train_model,
)
from .runconfig import RunConfig, load_config
from .seeds import derive_seed

EXIT_CODES = {"config": 2, "data": 3, "train": 4, "internal": 1}


def cmd_preprocess(cfg: RunConfig) -> int:
    """Ingest, filter, and store the dataset bundle; print the stats table."""
    ds = cfg.dataset
    if not ds.path:
        raise ConfigError("dataset.path is required for preprocess")
    frame = load_events_frame(ds.path, ds.format)
    log = preprocess(frame, ds.min_user_len, ds.min_item_count,
                     ds.drop_repeated_items)
    from .data import save_bundle

    save_bundle(log, cfg.bundle, extra_meta={
        "filter": {
            "min_user_len": ds.min_user_len,
            "min_item_count": ds.min_item_count,
            "drop_repeated_items": ds.drop_repeated_items,
        },
        "split": {
            "n_holdout": ds.n_holdout,
            "val_fraction": ds.val_fraction,
            "seed": cfg.split_seed,
        },
        "master_seed": cfg.seed,
    })
    print(compute_stats(log).table())
    print(f"bundle written to {cfg.bundle}")
    return 0


def _load_split(cfg: RunConfig):
    log, meta = load_bundle(cfg.bundle)
    sp = meta["split"]
    return log, split(log, sp["n_holdout"], sp["val_fraction"], sp["seed"])


def cmd_train(cfg: RunConfig) -> int:
    """Train on the bundle's train portion; write checkpoint + history."""
    log, dataset = _load_split(cfg)
    mcfg = ModelConfig(catalog_size=log.catalog.item_count,
                       **cfg.model_fields())
    tcfg = TrainConfig(seed=cfg.train_seed, **cfg.train_fields())
    result = train_model(dataset, mcfg, tcfg)
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.params, mcfg, cfg.checkpoint)
    history = {
        "best_epoch": result.best_epoch,
        "epochs": [asdict(e) for e in result.history],
    }
    (Path(cfg.out) / "history.json").write_text(
        json.dumps(history, sort_keys=True, indent=2) + "\n")
    best = result.history[result.best_epoch - 1]
    print(f"trained {len(result.history)} epochs; best epoch "
          f"{result.best_epoch} (val NDCG@{tcfg.eval_k} {best.val_ndcg:.4f})")
    print(f"checkpoint written to {cfg.checkpoint}")
    return 0


def cmd_evaluate(cfg: RunConfig, split_name=None, workers=None) -> int:
    """Run every configured strategy on the chosen split; write reports."""
    _, dataset = _load_split(cfg)
    params, mcfg = load_checkpoint(cfg.checkpoint)
    model = TransformerModel(params, mcfg)
    ev = cfg.eval_fields()
    split_name = split_name or ev["split"]
    workers = workers if workers is not None else ev["workers"]
    report = evaluate_split(
        model, dataset, cfg.descriptors(), split_name=split_name,
        k=ev["k"], seed=cfg.eval_seed, workers=workers,
        max_users=ev["max_users"],
    )
    out_dir = Path(cfg.out) / f"eval_{split_name}"
    save_report(report, out_dir)
    for s in report.strategies:
        line = "  ".join(f"{name} {value:.4f}"
                         for name, value in sorted(s.metrics.items()))
        print(f"{s.label:<40} {line}")
    print(f"reports written to {out_dir}")
    return 0


def cmd_sweep(cfg: RunConfig, split_name=None, workers=None) -> int:
    """Evaluate a strategy over a parameter grid; write per-point reports."""
    _, dataset = _load_split(cfg)
    params, mcfg = load_checkpoint(cfg.checkpoint)
    model = TransformerModel(params, mcfg)
    ev = cfg.eval_fields()
    split_name = split_name or ev["split"]
    workers = workers if workers is not None else ev["workers"]
    sweep = cfg.sweep_fields()
    base = dict(sweep["strategy"])
    grid = sweep["grid"]
    names = sorted(grid)
    sweep_dir = Path(cfg.out) / "sweep"
    rows = []
    for idx, values in enumerate(itertools.product(*(grid[n] for n in names))):
        point = dict(zip(names, values))
        desc = StrategyDescriptor.from_dict({**base, **point})
        report = evaluate_split(
            model, dataset, [desc], split_name=split_name, k=ev["k"],
            seed=cfg.eval_seed, workers=workers, max_users=ev["max_users"],
        )
        save_report(report, sweep_dir / f"point_{idx:03d}")
        rows.append((point, report.strategies[0].metrics))
        shown = ",".join(f"{n}={point[n]}" for n in names)
        print(f"point {idx:03d} [{shown}] "
              + "  ".join(f"{k_} {v:.4f}" for k_, v in sorted(rows[-1][1].items())))
    metric_names = sorted(rows[0][1]) if rows else []
    lines = ["point," + ",".join(names + metric_names)]
    for idx, (point, metrics) in enumerate(rows):
        cells = [str(idx)] + [str(point[n]) for n in names] \
            + [repr(metrics[m]) for m in metric_names]
        lines.append(",".join(cells))
    sweep_dir.mkdir(parents=True, exist_ok=True)
    (sweep_dir / "sweep_summary.csv").write_text("\n".join(lines) + "\n")
    print(f"sweep summary written to {sweep_dir / 'sweep_summary.csv'}")
    return 0


def cmd_timing(cfg: RunConfig, workers=None) -> int:
    """Measure mean per-user latency of each strategy; aggregations per S.

    Measurements run inline on one core regardless of ``workers`` so the
    numbers reflect per-user latency rather than throughput.
    """
    _, dataset = _load_split(cfg)
    params, mcfg = load_checkpoint(cfg.checkpoint)
    model = TransformerModel(params, mcfg)
    ev = cfg.eval_fields()
    tf = cfg.timing_fields()
    users = dataset.users_of(ev["split"])[: tf["max_users"]]
    rows = []
    for desc in cfg.descriptors():
        grid = tf["s_grid"] if desc.name in ("rra", "ra") else [None]
        for s_value in grid:
            d = desc if s_value is None else StrategyDescriptor.from_dict(
                {"name": desc.name, "K": desc.K, "T": desc.T,
                 "topk": desc.topk, "S": s_value})
            t0 = time.perf_counter()
            for u in users:
                recommend(model, dataset.train_sequences[u], d,
                          seed=derive_seed(cfg.eval_seed, f"{d.label}/user{u}"))
            mean_ms = (time.perf_counter() - t0) / users.size * 1000.0
            rows.append((d.label, "" if s_value is None else s_value, mean_ms))
            print(f"{d.label:<40} S={s_value if s_value is not None else '-':<6}"
                  f" {mean_ms:8.2f} ms/user")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["strategy,S,mean_ms_per_user"]
    lines += [f"{label},{s},{ms:.3f}" for label, s, ms in rows]
    (out / "timing.csv").write_text("\n".join(lines) + "\n")
    print(f"timing table written to {out / 'timing.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genrec",
        description="Config-driven Top-K sequential recommendation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("preprocess", "ingest and filter raw events into a dataset bundle"),
        ("train", "train the sequence model on the bundle"),
        ("evaluate", "evaluate configured strategies on a split"),
        ("sweep", "evaluate one strategy over a parameter grid"),
        ("timing", "measure per-user inference latency"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        if name in ("evaluate", "sweep"):
            p.add_argument("--split", choices=("validation", "test"),
                           default=None, help="which user split to evaluate")
        if name in ("evaluate", "sweep", "timing"):
            p.add_argument("--workers", type=int, default=None,
                           help="evaluation worker processes")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed,
                          out_override=args.out)
        if args.command == "preprocess":
            return cmd_preprocess(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, split_name=args.split,
                                workers=args.workers)
        if args.command == "sweep":
            return cmd_sweep(cfg, split_name=args.split, workers=args.workers)
        if args.command == "timing":
            return cmd_timing(cfg, workers=args.workers)
        raise ConfigError(f"unknown command {args.command!r}")
    except GenrecError as e:
        print(f"error:{e.category}: {e}", file=sys.stderr)
        return EXIT_CODES.get(e.category, 1)
    except (ValueError, OSError) as e:
        print(f"error:internal: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
