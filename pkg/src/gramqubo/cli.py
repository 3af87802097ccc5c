"""Command line interface: train, baseline, benchmark, solve, sizes, eval.

Configuration is a flat JSON object; command-line flags override file
values and every default is echoed into the run's config.json snapshot.
Single-run defaults follow the digits study regime (1000 sweeps);
benchmark mode defaults to the multi-dataset regime (100 sweeps, one
read).  The run seed deterministically derives every random stream
(subsampling, frozen filters, head initialization, per-solve annealing),
so a snapshot reproduces its run bit-identically.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from gramqubo.annealer import AnnealConfig, anneal_with_read_energies
from gramqubo.data import DATASET_NAMES, SubsampleSpec, prepare_dataset
from gramqubo.features import ConvSpec, feature_dim, init_frozen_conv
from gramqubo.qubo import BRUTE_FORCE_MAX_VARS, brute_force_min, evaluate_with_offset, read_qubo_file
from gramqubo.runio import METRIC_KEYS, is_complete, load_json, load_weights, load_conv, evaluate_final, save_run
from gramqubo.trainer import (
    TAG_CONV,
    TAG_SUBSAMPLE,
    TrainConfig,
    derive_seed,
    train_classical,
    train_qubo,
)

DEFAULTS = {
    "dataset": "digits",
    "data_path": None,
    "num_classes": 10,
    "train_per_class": 100,
    "test_per_class": None,  # resolves to 54 for digits, 50 otherwise
    "method": None,  # resolves to qubo<bits> or classical
    "bits": 20,
    "iterations": 1000,
    "sweeps": 1000,
    "reads": 1,
    "beta_min": 0.01,
    "beta_max": 3.0,
    "delta_max": 0.5,
    "lambda": 0.001,
    "learning_rate": 0.1,
    "step_alpha": 1.0,
    "eval_every": 10,
    "seed": 42,
    "diagonal_mode": False,
    "kernel": 3,
    "pool": 2,
    "filters": 2,
}

BENCHMARK_SWEEPS = 100


def resolve_config(file_config: dict | None, overrides: dict) -> dict:
    """Merge defaults, file values, and flag overrides into a snapshot."""
    cfg = dict(DEFAULTS)
    for source in (file_config or {}, overrides):
        for key, value in source.items():
            if key not in DEFAULTS:
                raise ValueError(f"unknown config key {key!r}")
            if value is not None:
                cfg[key] = value
    method = cfg["method"]
    if method is None or method == "qubo":
        cfg["method"] = f"qubo{cfg['bits']}"
    elif method == "classical":
        pass
    elif method.startswith("qubo") and method[4:].isdigit():
        cfg["bits"] = int(method[4:])  # "qubo20" style names carry the precision
    else:
        raise ValueError(f"unknown method {method!r}")
    if cfg["test_per_class"] is None:
        cfg["test_per_class"] = 54 if cfg["dataset"] == "digits" else 50
    if cfg["dataset"] not in DATASET_NAMES:
        raise ValueError(f"unknown dataset {cfg['dataset']!r}; expected one of {DATASET_NAMES}")
    return cfg


def conv_spec_from(cfg: dict) -> ConvSpec:
    return ConvSpec(
        input_h=8, input_w=8, kernel=cfg["kernel"], pool=cfg["pool"], filters=cfg["filters"]
    )


def train_config_from(cfg: dict) -> TrainConfig:
    return TrainConfig(
        iterations=cfg["iterations"],
        bits=cfg["bits"],
        delta_max=cfg["delta_max"],
        lam=cfg["lambda"],
        anneal=AnnealConfig(
            num_sweeps=cfg["sweeps"],
            num_reads=cfg["reads"],
            beta_min=cfg["beta_min"],
            beta_max=cfg["beta_max"],
        ),
        step_alpha=cfg["step_alpha"],
        eval_every=cfg["eval_every"],
        seed=cfg["seed"],
        diagonal_mode=cfg["diagonal_mode"],
        learning_rate=cfg["learning_rate"],
    )


def load_dataset_from(cfg: dict):
    if not cfg["data_path"]:
        raise ValueError("no data_path configured (use --data-path or the config file)")
    if not os.path.exists(cfg["data_path"]):
        raise FileNotFoundError(f"data path not found: {cfg['data_path']}")
    spec = SubsampleSpec(
        train_per_class=cfg["train_per_class"],
        test_per_class=cfg["test_per_class"],
        seed=derive_seed(cfg["seed"], TAG_SUBSAMPLE),
    )
    return prepare_dataset(cfg["dataset"], cfg["data_path"], spec, cfg["num_classes"])


def run_training(cfg: dict):
    """Execute one training job; returns (record, conv, dataset)."""
    dataset = load_dataset_from(cfg)
    conv = init_frozen_conv(conv_spec_from(cfg), derive_seed(cfg["seed"], TAG_CONV))
    train_cfg = train_config_from(cfg)
    if cfg["method"] == "classical":
        record = train_classical(dataset, conv, train_cfg)
    else:
        record = train_qubo(dataset, conv, train_cfg)
    return record, conv, dataset


def qubo_dimensions(cfg: dict) -> tuple[int, int]:
    d = feature_dim(conv_spec_from(cfg))
    n = (d + 1) * cfg["bits"]
    return n, n * (n - 1) // 2


def default_run_dir(cfg: dict) -> str:
    return os.path.join("runs", f"{cfg['dataset']}_{cfg['method']}_seed{cfg['seed']}")


def format_metrics(payload: dict) -> str:
    parts = [f"{key} {100.0 * payload[key]:.1f}%" for key in METRIC_KEYS]
    return "  ".join(parts)


def _read_config_file(path):
    if path is None:
        return None
    with open(path) as fh:
        return json.load(fh)


def cmd_train(args, method: str | None = None) -> int:
    overrides = {
        "seed": args.seed,
        "bits": args.bits,
        "sweeps": args.sweeps,
        "reads": args.reads,
        "dataset": args.dataset,
        "data_path": args.data_path,
        "iterations": args.iterations,
    }
    if method is not None:
        overrides["method"] = method
    cfg = resolve_config(_read_config_file(args.config), overrides)
    if args.dry_run:
        n, pairs = qubo_dimensions(cfg)
        print(json.dumps(cfg, indent=2, sort_keys=True))
        print(f"qubo size: {n} variables, {pairs} pairwise terms")
        return 0
    record, conv, dataset = run_training(cfg)
    run_dir = args.out or default_run_dir(cfg)
    payload = save_run(run_dir, cfg, record, conv, dataset)
    print(f"run dir: {run_dir}")
    print(f"final loss {payload['final_loss']:.3f}  train acc {100 * payload['train_accuracy']:.1f}%")
    print(format_metrics(payload))
    return 0


def cmd_baseline(args) -> int:
    return cmd_train(args, method="classical")


def _benchmark_job(cfg: dict, run_dir: str) -> str:
    try:
        record, conv, dataset = run_training(cfg)
        save_run(run_dir, cfg, record, conv, dataset)
        return "ok"
    except Exception as exc:  # recorded, not fatal to the grid
        return f"failed: {exc}"


def cmd_benchmark(args) -> int:
    with open(args.spec) as fh:
        spec = json.load(fh)
    datasets = spec.get("datasets", [])
    seeds = spec.get("seeds", [])
    methods = spec.get("methods", [])
    if not datasets or not seeds or not methods:
        raise ValueError("benchmark spec needs datasets, seeds, and methods")
    for ds in datasets:
        if "name" not in ds or "path" not in ds:
            raise ValueError(f"benchmark dataset entries need name and path, got {ds}")
    base = dict(spec.get("config", {}))
    base.setdefault("sweeps", BENCHMARK_SWEEPS)
    if args.sweeps is not None:
        base["sweeps"] = args.sweeps

    jobs = []
    statuses = {}
    for ds in datasets:
        for method in methods:
            for seed in seeds:
                cfg = resolve_config(
                    base,
                    {
                        "dataset": ds["name"],
                        "data_path": ds["path"],
                        "method": method,
                        "seed": seed,
                    },
                )
                run_dir = os.path.join(args.out, f"{ds['name']}_{method}_seed{seed}")
                key = (ds["name"], method, seed)
                if is_complete(run_dir):
                    statuses[key] = "cached"
                else:
                    jobs.append((key, cfg, run_dir))

    if args.jobs > 1 and jobs:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {key: pool.submit(_benchmark_job, cfg, rd) for key, cfg, rd in jobs}
        for key, fut in futures.items():
            statuses[key] = fut.result()
    else:
        for key, cfg, run_dir in jobs:
            statuses[key] = _benchmark_job(cfg, run_dir)

    for key in sorted(statuses):
        print(f"{key[0]} {key[1]} seed={key[2]}: {statuses[key]}")
    _write_benchmark_tables(args.out, datasets, methods, seeds, statuses)
    failed = sum(1 for s in statuses.values() if s.startswith("failed"))
    return 1 if failed else 0


def _write_benchmark_tables(out_dir, datasets, methods, seeds, statuses) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "runs.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "method", "seed", "status", "run_dir"])
        for (ds, method, seed), status in sorted(statuses.items()):
            writer.writerow([ds, method, seed, status, f"{ds}_{method}_seed{seed}"])

    agg_columns = ["train_acc", "test_acc", "precision", "recall", "f1", "kappa", "mcc"]
    agg_rows = []
    recall_rows = []
    for ds in datasets:
        for method in methods:
            payloads = []
            for seed in seeds:
                run_dir = os.path.join(out_dir, f"{ds['name']}_{method}_seed{seed}")
                if is_complete(run_dir):
                    payloads.append(load_json(run_dir, "metrics.json"))
            if not payloads:
                continue
            values = {
                "train_acc": [p["train_accuracy"] for p in payloads],
                "test_acc": [p["accuracy"] for p in payloads],
                "precision": [p["precision"] for p in payloads],
                "recall": [p["recall"] for p in payloads],
                "f1": [p["f1"] for p in payloads],
                "kappa": [p["kappa"] for p in payloads],
                "mcc": [p["mcc"] for p in payloads],
            }
            row = [ds["name"], method, len(payloads)]
            for col in agg_columns:
                row.append(round(100.0 * _mean(values[col]), 4))
                row.append(round(100.0 * _std(values[col]), 4))
            agg_rows.append(row)
            per_class = np.array([p["per_class_recall"] for p in payloads])
            for c in range(per_class.shape[1]):
                recall_rows.append(
                    [
                        ds["name"],
                        method,
                        c,
                        round(100.0 * _mean(per_class[:, c]), 4),
                        round(100.0 * _std(per_class[:, c]), 4),
                    ]
                )

    with open(os.path.join(out_dir, "aggregate.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["dataset", "method", "seeds"]
        for col in agg_columns:
            header += [f"{col}_mean", f"{col}_std"]
        writer.writerow(header)
        writer.writerows(agg_rows)

    with open(os.path.join(out_dir, "recall.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "method", "class", "recall_mean", "recall_std"])
        writer.writerows(recall_rows)


def _mean(vals) -> float:
    return float(np.mean(vals))


def _std(vals) -> float:
    return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0


def cmd_solve(args) -> int:
    problem = read_qubo_file(args.qubo_file)
    if args.exact:
        if problem.n > BRUTE_FORCE_MAX_VARS:
            raise ValueError(
                f"--exact supports n <= {BRUTE_FORCE_MAX_VARS}, file has n={problem.n}"
            )
        sample = brute_force_min(problem)
        print("solver: exact enumeration")
        print(f"bits: {''.join(str(int(b)) for b in sample.bits)}")
        print(f"energy: {sample.energy!r}")
        print(f"energy+offset: {evaluate_with_offset(problem, sample.bits)!r}")
        return 0
    cfg = AnnealConfig(
        num_sweeps=args.sweeps or 1000,
        num_reads=args.reads or 1,
        beta_min=args.beta_min,
        beta_max=args.beta_max,
        seed=args.seed if args.seed is not None else 0,
    )
    sample, read_best = anneal_with_read_energies(problem, cfg)
    print(f"solver: simulated annealing ({cfg.num_sweeps} sweeps, {cfg.num_reads} reads)")
    print(f"bits: {''.join(str(int(b)) for b in sample.bits)}")
    print(f"energy: {sample.energy!r}")
    print(f"energy+offset: {evaluate_with_offset(problem, sample.bits)!r}")
    print(
        f"reads: best {read_best.min()!r}  mean {read_best.mean()!r}  "
        f"worst {read_best.max()!r}"
    )
    return 0


def cmd_sizes(args) -> int:
    print("K vars pairs")
    for bits in args.bits_list:
        n = (args.d + 1) * bits
        print(f"{bits} {n} {n * (n - 1) // 2}")
    return 0


def cmd_eval(args) -> int:
    cfg = load_json(args.run, "config.json")
    if args.data_path:
        cfg["data_path"] = args.data_path
    dataset = load_dataset_from(cfg)
    conv = load_conv(args.run, conv_spec_from(cfg))
    W = load_weights(args.run)
    rep, cm = evaluate_final(dataset, conv, W)
    payload = rep.as_dict()
    print(format_metrics(payload))
    print("per-class recall: " + " ".join(f"{100 * r:.1f}" for r in rep.per_class_recall))
    return 0


def _add_train_flags(sub):
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--out", help="run directory (default runs/<dataset>_<method>_seed<seed>)")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--bits", type=int)
    sub.add_argument("--sweeps", type=int)
    sub.add_argument("--reads", type=int)
    sub.add_argument("--iterations", type=int)
    sub.add_argument("--dataset", choices=DATASET_NAMES)
    sub.add_argument("--data-path")
    sub.add_argument("--dry-run", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gramqubo",
        description="Train frozen-feature CNN classifier heads with per-class QUBOs.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("train", help="one QUBO training run")
    _add_train_flags(sub)
    sub.set_defaults(func=cmd_train)

    sub = subs.add_parser("baseline", help="one classical gradient-descent run")
    _add_train_flags(sub)
    sub.set_defaults(func=cmd_baseline)

    sub = subs.add_parser("benchmark", help="run a dataset x method x seed grid")
    sub.add_argument("spec", help="benchmark spec JSON")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--jobs", type=int, default=1, help="concurrent training jobs")
    sub.add_argument("--sweeps", type=int, help="override SA sweeps for every run")
    sub.set_defaults(func=cmd_benchmark)

    sub = subs.add_parser("solve", help="solve a QUBO text file")
    sub.add_argument("qubo_file")
    sub.add_argument("--sweeps", type=int)
    sub.add_argument("--reads", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--beta-min", type=float, default=0.01)
    sub.add_argument("--beta-max", type=float, default=3.0)
    sub.add_argument("--exact", action="store_true", help="brute-force enumeration")
    sub.set_defaults(func=cmd_solve)

    sub = subs.add_parser("sizes", help="per-class QUBO size per bit precision")
    sub.add_argument("--d", type=int, default=18, help="feature dimension")
    sub.add_argument(
        "--bits",
        dest="bits_list",
        type=int,
        nargs="+",
        default=[5, 10, 15, 20],
    )
    sub.set_defaults(func=cmd_sizes)

    sub = subs.add_parser("eval", help="metrics from a saved run directory")
    sub.add_argument("--run", required=True, help="run directory")
    sub.add_argument("--data-path", help="override the dataset location")
    sub.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
