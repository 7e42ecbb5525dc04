"""Command-line experiment runner.

    fvtrain run    --lambda 0.1 --epochs 15 --out runs/fv01
    fvtrain sweep  --lambdas 0.1,0.5,1 --fv-form similarity --out runs/sweep
    fvtrain replay runs/fv01/manifest.json --out runs/fv01-again

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numeric divergence.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import subprocess
import sys
from dataclasses import fields
from pathlib import Path


from . import __version__
from .data import load_mnist, preprocess
from .errors import (
    CalibrationError,
    ConfigurationError,
    DataError,
    DomainError,
    FormatError,
    NumericDivergenceError,
    ShapeError,
)
from .loss import FV_FORMS
from .train import LR_SCHEDULES, MetricsRecord, TrainConfig, build_model, calibrate_initial_fidelity, evaluate, train

log = logging.getLogger("fvtrain")

CSV_SCHEMA_VERSION = 1
METRIC_COLUMNS = [f.name for f in fields(MetricsRecord)]
SUMMARY_COLUMNS = ["arm", "lambda", "fv_form", "initial_fidelity", "final_fidelity", "final_accuracy"]
DEFAULT_LAMBDAS = (0.1, 0.5, 1.0)
CALIBRATION_TARGET = 0.611
CALIBRATION_TOLERANCE = 0.05
CALIBRATION_SEEDS = 500
# calibration candidates for base seed s are s * CALIBRATION_STRIDE + k
CALIBRATION_STRIDE = 10_000

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse exits with 2 by default, which is reserved for data errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def _add_common(p):
    p.add_argument("--fv-form", choices=FV_FORMS, default="eq1")
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--batch-size", type=int, default=10)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--lr-schedule", choices=LR_SCHEDULES, default="constant")
    p.add_argument("--seed", type=int, default=0, help="data split, batch order and default init seed")
    p.add_argument("--init-seed", type=int, help="model initialization seed (skips calibration)")
    p.add_argument("--filters", type=int, default=2)
    p.add_argument("--qubits", type=int, default=4)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--classes", type=_int_list, default=[0, 1], help="comma-separated digits")
    p.add_argument("--train-size", type=int, default=200)
    p.add_argument("--test-size", type=int, default=100)
    p.add_argument("--data-dir", help="MNIST IDX directory (default: $MNIST_DATA_DIR)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--calibration-tolerance", type=float, default=CALIBRATION_TOLERANCE)
    p.add_argument("--calibration-seeds", type=int, default=CALIBRATION_SEEDS)
    p.add_argument("--plot", action="store_true", help="also write PNG line plots (needs matplotlib)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = _Parser(prog="fvtrain", description="Vanilla-Train vs FV-Train for quanvolutional networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="one training run")
    run.add_argument("--lambda", dest="lam", type=float, default=0.0)
    run.add_argument(
        "--calibrate-fidelity", type=float, metavar="TARGET",
        help="search an init seed whose initial filter fidelity matches TARGET",
    )
    _add_common(run)

    sweep = sub.add_parser("sweep", help="vanilla plus a lambda sweep from a shared initialization")
    sweep.add_argument("--lambdas", type=_float_list, default=list(DEFAULT_LAMBDAS))
    sweep.add_argument("--calibrate-fidelity", type=float, default=CALIBRATION_TARGET, metavar="TARGET")
    sweep.add_argument("--no-calibration", action="store_true")
    _add_common(sweep)

    replay = sub.add_parser("replay", help="rerun the experiment recorded in a manifest")
    replay.add_argument("manifest")
    replay.add_argument("--out", required=True)
    replay.add_argument("--data-dir")
    replay.add_argument("-v", "--verbose", action="store_true")
    return parser


# -- helpers -------------------------------------------------------------------


def build_id():
    try:
        rev = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True, check=True,
            cwd=Path(__file__).resolve().parent,
        ).stdout.strip()
    except (OSError, subprocess.CalledProcessError):
        rev = "unknown"
    return f"fvtrain {__version__} ({rev})"


def metrics_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for r in records:
        writer.writerow([repr(v) for v in astuple_record(r)])
    return buf.getvalue()


def astuple_record(r):
    return [getattr(r, c) for c in METRIC_COLUMNS]


def data_settings(args):
    return {
        "classes": list(args.classes),
        "train_size": args.train_size,
        "test_size": args.test_size,
        "split_seed": args.seed,
        "resolution": [14, 14],
    }


def load_data(data_dir, settings):
    raw = load_mnist(data_dir)
    pool_hash = hashlib.sha256(raw.images.tobytes() + raw.labels.tobytes()).hexdigest()
    train_set, test_set = preprocess(
        raw, settings["classes"], settings["train_size"], settings["test_size"], settings["split_seed"]
    )
    return train_set, test_set, pool_hash


def config_from_args(args, lam, init_seed):
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        lam=lam,
        fv_form=args.fv_form,
        seed=args.seed,
        init_seed=init_seed,
        n_filters=args.filters,
        n_qubits=args.qubits,
        depth=args.depth,
        lr_schedule=args.lr_schedule,
    )


def calibrate(args, target, train_set):
    start = args.seed * CALIBRATION_STRIDE
    seed, fid = calibrate_initial_fidelity(
        target,
        args.calibration_tolerance,
        range(start, start + args.calibration_seeds),
        train_set.images,
        n_filters=args.filters,
        n_qubits=args.qubits,
        depth=args.depth,
        n_classes=train_set.n_classes,
    )
    log.info("calibrated init seed %d: initial training-set fidelity %.4f (target %.3f)", seed, fid, target)
    return {"target": target, "tolerance": args.calibration_tolerance, "init_seed": seed, "train_fidelity": fid}


def run_one(config, train_set, test_set, out_dir, manifest_extra):
    """Train one arm, write ``metrics.csv`` and ``manifest.json``; returns the records."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = build_model(config, train_set)
    init_acc, init_fid = evaluate(model, test_set)
    epoch_seconds = []
    _, records = train(config, train_set, test_set, model=model, on_epoch=lambda r, s: epoch_seconds.append(s))
    (out_dir / "metrics.csv").write_text(metrics_csv(records))
    manifest = {
        "mode": config.mode,
        "config": config.to_dict(),
        **manifest_extra,
        "circuits": [spec.to_text() for spec, _ in model.filters],
        "initial_mean_fidelity": init_fid,
        "initial_test_accuracy": init_acc,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "csv_columns": METRIC_COLUMNS,
        "build": build_id(),
        "epoch_seconds": epoch_seconds,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return init_fid, records


def _plot(out_dir, arms):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.warning("matplotlib not available; skipping plots")
        return
    fig, (ax_acc, ax_fid) = plt.subplots(1, 2, figsize=(9, 3.5))
    for name, (init_fid, records) in arms.items():
        epochs = [0] + [r.epoch for r in records]
        ax_acc.plot(epochs[1:], [r.test_accuracy for r in records], label=name)
        ax_fid.plot(epochs, [init_fid] + [r.mean_fidelity for r in records], label=name)
    ax_acc.set(xlabel="epoch", ylabel="top-1 accuracy")
    ax_fid.set(xlabel="epoch", ylabel="mean filter fidelity")
    ax_fid.legend()
    fig.tight_layout()
    fig.savefig(Path(out_dir) / "curves.png", dpi=120)
    plt.close(fig)


# -- commands ------------------------------------------------------------------


def run_experiment(args):
    settings = data_settings(args)
    train_set, test_set, pool_hash = load_data(args.data_dir, settings)
    extra = {"data": {**settings, "pool_sha256": pool_hash}}
    init_seed = args.init_seed
    if init_seed is None and args.calibrate_fidelity is not None:
        extra["calibration"] = calibrate(args, args.calibrate_fidelity, train_set)
        init_seed = extra["calibration"]["init_seed"]
    config = config_from_args(args, args.lam, init_seed)
    init_fid, records = run_one(config, train_set, test_set, args.out, extra)
    if args.plot:
        _plot(args.out, {config.mode: (init_fid, records)})
    last = records[-1]
    print(f"{config.mode} lambda={config.lam}: accuracy {last.test_accuracy:.4f}, fidelity {last.mean_fidelity:.4f}")
    return EXIT_OK


def run_sweep(args):
    lambdas = [float(v) for v in args.lambdas]
    if any(v <= 0 for v in lambdas):
        raise ConfigurationError("sweep lambdas must be positive; the vanilla arm is added automatically")
    settings = data_settings(args)
    train_set, test_set, pool_hash = load_data(args.data_dir, settings)
    extra = {"data": {**settings, "pool_sha256": pool_hash}}
    init_seed = args.init_seed
    if init_seed is None and not args.no_calibration:
        extra["calibration"] = calibrate(args, args.calibrate_fidelity, train_set)
        init_seed = extra["calibration"]["init_seed"]

    out = Path(args.out)
    arms = {}
    for lam in [0.0] + lambdas:
        name = "vanilla" if lam == 0 else f"fv_lambda_{lam:g}"
        config = config_from_args(args, lam, init_seed)
        log.info("arm %s", name)
        try:
            arms[name] = (config, *run_one(config, train_set, test_set, out / name, extra))
        except NumericDivergenceError as exc:
            raise NumericDivergenceError(f"arm {name}: {exc}", exc.epoch, exc.batch) from exc

    with open(out / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["arm", "lambda"] + METRIC_COLUMNS)
        for name, (config, _, records) in arms.items():
            for r in records:
                writer.writerow([name, repr(config.lam)] + [repr(v) for v in astuple_record(r)])
    summary = []
    for name, (config, init_fid, records) in arms.items():
        last = records[-1]
        summary.append([name, config.lam, config.fv_form, init_fid, last.mean_fidelity, last.test_accuracy])
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for row in summary:
            writer.writerow([row[0], repr(row[1]), row[2]] + [repr(v) for v in row[3:]])
    if args.plot:
        _plot(out, {name: (fid, rec) for name, (_, fid, rec) in arms.items()})

    print(f"{'arm':<18}{'lambda':>8}{'init fid':>10}{'final fid':>11}{'accuracy':>10}")
    for name, lam, _, init_fid, fid, acc in summary:
        print(f"{name:<18}{lam:>8g}{init_fid:>10.4f}{fid:>11.4f}{acc:>10.4f}")
    return EXIT_OK


def replay(args):
    manifest = json.loads(Path(args.manifest).read_text())
    config = TrainConfig(**manifest["config"])
    settings = {k: manifest["data"][k] for k in ("classes", "train_size", "test_size", "split_seed")}
    train_set, test_set, pool_hash = load_data(args.data_dir, settings)
    if pool_hash != manifest["data"].get("pool_sha256", pool_hash):
        log.warning("data pool differs from the one recorded in the manifest")
    extra = {k: manifest[k] for k in ("data", "calibration") if k in manifest}
    _, records = run_one(config, train_set, test_set, args.out, extra)
    print(f"replayed {config.mode} run: {len(records)} epochs -> {args.out}")
    return EXIT_OK


COMMANDS = {"run": run_experiment, "sweep": run_sweep, "replay": replay}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return COMMANDS[args.command](args)
    except (DataError, FormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericDivergenceError as exc:
        print(f"numeric divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigurationError, DomainError, ShapeError, IndexError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
