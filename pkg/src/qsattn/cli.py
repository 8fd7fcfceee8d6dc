"""Command-line orchestration: train, eval, sweep, complexity.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import datasets
from .channels import CHANNEL_KINDS, make_channel
from .gradients import GRADIENT_MODES, GRADIENT_SHIFT
from .network import NOISE_FINAL, NOISE_PLACEMENTS, accuracy
from .params import ParamStore
from .topology import VARIANTS, build_topology, complexity_report, init_param_store
from .training import (
    OPTIMIZER_ADAM,
    OPTIMIZERS,
    TrainConfig,
    TrainingDiverged,
    train,
    write_loss_curve,
)

DEFAULT_LEVELS = [0.001, 0.005, 0.01]
DEFAULT_EPOCHS = {"iris": 100, "mc": 200, "rp": 200}


class UsageError(Exception):
    pass


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        values[key.strip()] = val.strip()
    return values


def _resolve(args: argparse.Namespace, config: dict[str, str],
             key: str, default, cast=str):
    """Flag > config file > built-in default."""
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    if key in config:
        return cast(config[key])
    return default


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", choices=datasets.DEFAULT_FILES.keys())
    parser.add_argument("--variant", choices=VARIANTS)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--data-dir")
    parser.add_argument("--out")
    parser.add_argument("--format", choices=("text", "json", "csv"))
    parser.add_argument("--config", help="key=value config file (flags override it)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsattn")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and write artifacts")
    _add_common(p_train)
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--lr", type=float)
    p_train.add_argument("--optimizer", choices=OPTIMIZERS)
    p_train.add_argument("--gradient", choices=GRADIENT_MODES)
    p_train.add_argument("--batch-size", type=int)

    p_eval = sub.add_parser("eval", help="evaluate a trained parameter file")
    _add_common(p_eval)
    p_eval.add_argument("--params", required=True)
    p_eval.add_argument("--split", choices=("train", "dev", "test"), default="test")
    p_eval.add_argument("--noise", choices=("none",) + CHANNEL_KINDS)
    p_eval.add_argument("--level", type=float)
    p_eval.add_argument("--noise-placement", choices=NOISE_PLACEMENTS)

    p_sweep = sub.add_parser("sweep", help="noise-robustness accuracy grid")
    _add_common(p_sweep)
    p_sweep.add_argument("--params", action="append", default=None,
                         metavar="DATASET=FILE",
                         help="trained parameter file per dataset (repeatable)")
    p_sweep.add_argument("--channels", help="comma-separated channel kinds")
    p_sweep.add_argument("--levels", help="comma-separated noise levels")
    p_sweep.add_argument("--noise-placement", choices=NOISE_PLACEMENTS)

    p_cplx = sub.add_parser("complexity", help="circuit complexity report")
    _add_common(p_cplx)
    return parser


# --- helpers ----------------------------------------------------------------


def _load_store_for(dataset: str, path: str) -> ParamStore:
    store = ParamStore.load(path)
    if store.dataset != dataset:
        raise UsageError(
            f"parameter file {path} was trained on {store.dataset!r}, "
            f"refusing to evaluate on {dataset!r}"
        )
    if store.variant not in VARIANTS:
        raise UsageError(f"parameter file {path} has bad variant {store.variant!r}")
    return store


def _eval_store(dataset: str, store: ParamStore, split_name: str,
                data_dir, noise, placement) -> tuple[float, list[int], list[int]]:
    splits, _ = datasets.load_splits(dataset, store.seed, data_dir)
    samples = splits[split_name]
    if not samples:
        raise UsageError(f"dataset {dataset} has no {split_name!r} split")
    topology = build_topology(dataset, store.variant)
    acc, preds = accuracy(topology, samples, store, noise, placement)
    return acc, preds, [s.label for s in samples]


# --- subcommands ------------------------------------------------------------


def cmd_train(args, config) -> int:
    dataset = _resolve(args, config, "dataset", None)
    if dataset is None:
        raise UsageError("--dataset is required")
    variant = _resolve(args, config, "variant", "optimized")
    seed = _resolve(args, config, "seed", 0, int)
    data_dir = _resolve(args, config, "data-dir", None)
    out_dir = Path(_resolve(args, config, "out", f"runs/{dataset}-{variant}-s{seed}"))
    train_config = TrainConfig(
        optimizer=_resolve(args, config, "optimizer", OPTIMIZER_ADAM),
        learning_rate=_resolve(args, config, "lr", 0.05, float),
        epochs=_resolve(args, config, "epochs", DEFAULT_EPOCHS[dataset], int),
        batch_size=_resolve(args, config, "batch-size", None, int),
        seed=seed,
        gradient_mode=_resolve(args, config, "gradient", GRADIENT_SHIFT),
    )
    train_config.validate()

    started = time.time()
    splits, vocab = datasets.load_splits(dataset, seed, data_dir)
    topology = build_topology(dataset, variant)
    store = init_param_store(topology, seed, vocab)
    result = train(topology, splits["train"], store, train_config,
                   splits["dev"] or None)
    final_store = result.best_store if result.best_store is not None else result.store

    out_dir.mkdir(parents=True, exist_ok=True)
    params_path = out_dir / "params.txt"
    curve_path = out_dir / "loss_curve.csv"
    final_store.save(params_path)
    write_loss_curve(result.history, curve_path)

    test_acc, _, _ = _eval_store(dataset, final_store, "test", data_dir,
                                 None, NOISE_FINAL)
    manifest = {
        "dataset": dataset,
        "variant": variant,
        "seed": seed,
        "config": {
            "optimizer": train_config.optimizer,
            "learning_rate": train_config.learning_rate,
            "epochs": train_config.epochs,
            "batch_size": train_config.batch_size,
            "gradient_mode": train_config.gradient_mode,
        },
        "complexity": complexity_report(dataset, variant),
        "outputs": {"params": str(params_path), "loss_curve": str(curve_path)},
        "metrics": {
            "final_train_loss": result.history[-1].train_loss,
            "final_train_accuracy": result.history[-1].train_acc,
            "test_accuracy": test_acc,
            "best_epoch": result.best_epoch,
        },
        "started_at": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(started)),
        "elapsed_seconds": time.time() - started,
    }
    # The manifest is written last: its presence marks a complete run.
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                           encoding="utf-8")
    print(f"wrote {out_dir}/manifest.json (test accuracy {100 * test_acc:.2f})")
    return 0


def cmd_eval(args, config) -> int:
    dataset = _resolve(args, config, "dataset", None)
    if dataset is None:
        raise UsageError("--dataset is required")
    data_dir = _resolve(args, config, "data-dir", None)
    fmt = _resolve(args, config, "format", "text")
    noise_kind = _resolve(args, config, "noise", "none")
    placement = _resolve(args, config, "noise-placement", NOISE_FINAL)
    noise = None
    if noise_kind != "none":
        level = _resolve(args, config, "level", None, float)
        if level is None:
            raise UsageError("--level is required with --noise")
        noise = make_channel(noise_kind, level)

    store = _load_store_for(dataset, args.params)
    acc, preds, labels = _eval_store(dataset, store, args.split, data_dir,
                                     noise, placement)
    if fmt == "json":
        print(json.dumps({"accuracy_percent": round(100 * acc, 2),
                          "predictions": preds, "labels": labels}))
    else:
        print(f"{100 * acc:.2f}")
        for k, (pred, label) in enumerate(zip(preds, labels)):
            print(f"sample {k}: predicted {pred} true {label}")
    out = _resolve(args, config, "out", None)
    if out:
        out_path = Path(out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        lines = ["index,predicted,label"]
        lines += [f"{k},{p},{l}" for k, (p, l) in enumerate(zip(preds, labels))]
        lines.append(f"accuracy,{100 * acc:.2f},")
        out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_sweep(args, config) -> int:
    placement = _resolve(args, config, "noise-placement", NOISE_FINAL)
    data_dir = _resolve(args, config, "data-dir", None)
    channels_raw = _resolve(args, config, "channels", ",".join(CHANNEL_KINDS))
    channels = [c for c in channels_raw.split(",") if c]
    if not channels:
        raise UsageError("empty channel list")
    for c in channels:
        if c not in CHANNEL_KINDS:
            raise UsageError(f"unknown channel {c!r}")
    levels_raw = _resolve(args, config, "levels",
                          ",".join(str(v) for v in DEFAULT_LEVELS))
    levels = [float(v) for v in levels_raw.split(",") if v]
    if levels != sorted(levels):
        raise UsageError("levels must be sorted ascending")
    if not args.params:
        raise UsageError("at least one --params DATASET=FILE is required")
    stores = {}
    for spec in args.params:
        name, sep, path = spec.partition("=")
        if not sep:
            raise UsageError(f"--params expects DATASET=FILE, got {spec!r}")
        stores[name] = _load_store_for(name, path)

    rows = ["channel,level,dataset,accuracy"]
    for name, store in stores.items():
        acc, _, _ = _eval_store(name, store, "test", data_dir, None, placement)
        rows.append(f"none,0,{name},{100 * acc:.2f}")
    for kind in channels:
        for level in levels:
            for name, store in stores.items():
                noise = make_channel(kind, level)
                acc, _, _ = _eval_store(name, store, "test", data_dir, noise,
                                        placement)
                rows.append(f"{kind},{level},{name},{100 * acc:.2f}")
    table = "\n".join(rows) + "\n"
    out = _resolve(args, config, "out", None)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


def cmd_complexity(args, config) -> int:
    dataset = _resolve(args, config, "dataset", None)
    variant = _resolve(args, config, "variant", None)
    if dataset is None or variant is None:
        raise UsageError("--dataset and --variant are required")
    fmt = _resolve(args, config, "format", "text")
    report = complexity_report(dataset, variant)
    if fmt == "json":
        print(json.dumps(report))
    else:
        for key, value in report.items():
            print(f"{key}: {value}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "complexity": cmd_complexity,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _read_config_file(args.config) if args.config else {}
        return COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 1
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
