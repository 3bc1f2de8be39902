"""Command-line pipeline: synth -> train / optimize -> eval.

Every stochastic command demands an explicit --seed; given the same seeds,
config, and --jobs 1, each command's output files are bit-reproducible
(the lone exception is the wall-clock ``seconds`` column of the trial log).
Settings come from flags, falling back to a plain ``key = value`` config
file (--config), falling back to built-in defaults; flags win. The
resolved settings are written to ``run_config.txt`` in the output
directory, and any supplied config file is copied there verbatim.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 validation or format
error, 5 numerical failure (training divergence).
"""

from __future__ import annotations

import argparse
import os
import shutil
import sys

import numpy as np

from . import dataset, hho, hpo, metrics, nn

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4
EXIT_NUMERICAL = 5


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _ratios(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three comma-separated numbers")
    return (parts[0], parts[1], parts[2])


def _widths(text: str) -> tuple[int, ...]:
    return tuple(_positive_int(p) for p in text.split(","))


_CONVERTERS = {
    "per_class": _positive_int,
    "dim": _positive_int,
    "classes": _positive_int,
    "separation": float,
    "noise": float,
    "seed": int,
    "format": str,
    "ratios": _ratios,
    "normalize": str,
    "hidden": _widths,
    "dropout": float,
    "lr": float,
    "batch": _positive_int,
    "epochs": int,
    "hawks": _positive_int,
    "iters": _positive_int,
    "epoch_budget": _positive_int,
    "lambda_loss": float,
    "final_epochs": int,
    "jobs": _positive_int,
    "data": str,
    "out": str,
}


def load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            values[key.strip()] = raw.strip()
    return values


def _resolve(args: argparse.Namespace, defaults: dict[str, object]) -> argparse.Namespace:
    """Flags beat config-file values beat defaults; None marks 'not given'."""
    config = load_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(config) - set(defaults)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key, default in defaults.items():
        if getattr(args, key, None) is not None:
            continue
        if key in config:
            converter = _CONVERTERS[key]
            try:
                setattr(args, key, converter(config[key]))
            except (ValueError, argparse.ArgumentTypeError) as err:
                raise UsageError(f"config key {key}: {err}") from None
        else:
            setattr(args, key, default)
    return args


REQUIRED = object()


def _check_required(args: argparse.Namespace, keys: list[str]) -> None:
    for key in keys:
        if getattr(args, key) is REQUIRED or getattr(args, key) is None:
            flag = "--" + key.replace("_", "-")
            if key == "seed":
                raise UsageError(f"{flag} is required: stochastic commands need an explicit seed")
            raise UsageError(f"{flag} is required")


def _write_run_config(args: argparse.Namespace, keys: list[str], out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "run_config.txt"), "w", encoding="utf-8") as fh:
        for key in keys:
            value = getattr(args, key)
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            fh.write(f"{key} = {value}\n")
    if getattr(args, "config", None):
        shutil.copy(args.config, os.path.join(out_dir, "config.txt"))


# ---------------------------------------------------------------------------
# subcommands


_SYNTH_KEYS = {
    "per_class": REQUIRED,
    "dim": 512,
    "classes": 3,
    "separation": 6.0,
    "noise": 1.0,
    "seed": REQUIRED,
    "out": REQUIRED,
    "format": "binary",
}


def cmd_synth(args: argparse.Namespace) -> int:
    args = _resolve(args, _SYNTH_KEYS)
    _check_required(args, ["per_class", "seed", "out"])
    ds = dataset.synthesize_blobs(
        args.per_class, args.dim, args.classes, args.separation, args.noise, args.seed
    )
    dataset.save_dataset(ds, args.out, args.format)
    print(f"wrote {len(ds)} records (dim {ds.dim}, {ds.n_classes} classes) to {args.out}")
    return EXIT_OK


def _load_split(args: argparse.Namespace):
    ds = dataset.load_dataset(args.data, args.format)
    raw = dataset.split(ds, args.ratios, args.seed)
    normalized, scaler = dataset.normalize_features(raw, args.normalize)
    return ds, raw, normalized, scaler


def _export_model_run(
    out_dir: str,
    model: nn.TrainedModel,
    raw_split: dataset.DatasetSplit,
    eval_split: dataset.DatasetSplit,
    scaler: dataset.Scaler,
    svg: bool,
) -> metrics.EvaluationReport | None:
    os.makedirs(out_dir, exist_ok=True)
    names = eval_split.train.class_names
    nn.save_checkpoint(model, os.path.join(out_dir, "model.lymm"), names, scaler)
    nn.write_history_csv(model.history, os.path.join(out_dir, "history.csv"))
    if len(raw_split.test) == 0:
        print("test part is empty; skipping evaluation report")
        return None
    dataset.save_dataset(raw_split.test, os.path.join(out_dir, "test.lymf"), "binary")
    probs, predicted = nn.predict(model, eval_split.test)
    report = metrics.full_report(
        probs, predicted, eval_split.test.labels, eval_split.test.n_classes, names
    )
    train_acc = nn.best_epoch(model).train_acc if model.history else None
    metrics.write_report_files(report, out_dir, training_accuracy=train_acc, svg=svg)
    return report


_TRAIN_KEYS = {
    "data": REQUIRED,
    "format": "binary",
    "seed": REQUIRED,
    "out": REQUIRED,
    "ratios": dataset.DEFAULT_RATIOS,
    "normalize": "none",
    "hidden": (256, 128, 64),
    "dropout": 0.5,
    "lr": 1e-3,
    "batch": 64,
    "epochs": 100,
}


def cmd_train(args: argparse.Namespace) -> int:
    args = _resolve(args, _TRAIN_KEYS)
    _check_required(args, ["data", "seed", "out"])
    ds, raw_split, split_, scaler = _load_split(args)
    if args.hyperparams:
        hp = hpo.read_best_config(args.hyperparams)
    else:
        hp = hpo.HyperParams(tuple(args.hidden), args.lr, args.dropout, args.batch)
    config = nn.NetworkConfig(
        input_dim=ds.dim,
        hidden_widths=hp.hidden_widths,
        output_classes=ds.n_classes,
        input_dropout_rate=hp.dropout_rate,
        weight_init_seed=args.seed,
    )
    schedule = nn.TrainingSchedule(
        initial_lr=hp.learning_rate, batch_size=hp.batch_size, max_epochs=args.epochs
    )
    model = nn.train(config, schedule, split_, seed=args.seed)
    _write_run_config(args, list(_TRAIN_KEYS), args.out)
    report = _export_model_run(args.out, model, raw_split, split_, scaler, args.svg)
    if model.history:
        best = nn.best_epoch(model)
        print(f"best epoch {best.epoch}: val_acc {best.val_acc:.4f}, val_loss {best.val_loss:.4f}")
    if report is not None:
        print(f"test accuracy {report.classification.accuracy:.4f}")
    print(f"artifacts written to {args.out}")
    return EXIT_OK


_OPTIMIZE_KEYS = {
    "data": REQUIRED,
    "format": "binary",
    "seed": REQUIRED,
    "out": REQUIRED,
    "ratios": dataset.DEFAULT_RATIOS,
    "normalize": "none",
    "hawks": 8,
    "iters": 10,
    "epoch_budget": 15,
    "lambda_loss": 0.1,
    "final_epochs": 100,
    "jobs": 1,
}


def cmd_optimize(args: argparse.Namespace) -> int:
    args = _resolve(args, _OPTIMIZE_KEYS)
    _check_required(args, ["data", "seed", "out"])
    if args.compare and not os.path.exists(args.compare):
        raise FileNotFoundError(f"comparison baseline not found: {args.compare}")
    ds, raw_split, split_, scaler = _load_split(args)
    space = hpo.default_hyperspace()
    hho_params = hho.HHOParams(n_hawks=args.hawks, max_iters=args.iters, seed=args.seed)
    fitness_config = hpo.FitnessConfig(
        lambda_loss=args.lambda_loss, epoch_budget=args.epoch_budget, train_seed=args.seed
    )
    best, trials, trace = hpo.optimize_hyperparameters(
        split_, space, hho_params, fitness_config, jobs=args.jobs
    )
    _write_run_config(args, list(_OPTIMIZE_KEYS), args.out)
    hpo.write_trials_csv(trials, os.path.join(args.out, "trials.csv"))
    trace.write_csv(os.path.join(args.out, "convergence.csv"))
    best_trial = min(trials, key=lambda r: (r.fitness, r.trial))
    hpo.write_best_config(
        best,
        os.path.join(args.out, "best_config.txt"),
        extras={
            "fitness": best_trial.fitness,
            "val_acc": best_trial.val_accuracy,
            "val_loss": best_trial.val_loss,
        },
    )
    print(
        f"search done: {len(trials)} trials, best fitness {best_trial.fitness:.6f} "
        f"(widths {best.hidden_widths}, lr {best.learning_rate:.2e}, "
        f"dropout {best.dropout_rate:.3f}, batch {best.batch_size})"
    )
    schedule = nn.TrainingSchedule(max_epochs=args.final_epochs)
    model = hpo.final_train(best, split_, schedule, seed=args.seed)
    report = _export_model_run(args.out, model, raw_split, split_, scaler, args.svg)
    if report is not None:
        print(f"final model test accuracy {report.classification.accuracy:.4f}")
    if args.compare:
        baseline_rows = metrics.read_metrics_csv(args.compare)
        own_rows = metrics.read_metrics_csv(os.path.join(args.out, "metrics.csv"))
        table = format_comparison(baseline_rows, own_rows)
        with open(os.path.join(args.out, "comparison.txt"), "w", encoding="utf-8") as fh:
            fh.write(table)
        print(table, end="")
    print(f"artifacts written to {args.out}")
    return EXIT_OK


def format_comparison(
    baseline_rows: list[tuple[str, float]], optimized_rows: list[tuple[str, float]]
) -> str:
    """Two-column metric table, rows aligned by name."""
    baseline = dict(baseline_rows)
    names = [n for n, _ in optimized_rows]
    for n, _ in baseline_rows:
        if n not in names:
            names.append(n)
    optimized = dict(optimized_rows)
    width = max(len(n) for n in names) + 2
    lines = [f"{'Metric':<{width}s} {'Baseline':>12s} {'Optimized':>12s}"]
    for name in names:
        b = baseline.get(name)
        o = optimized.get(name)
        b_txt = f"{b:.4f}" if b is not None else "-"
        o_txt = f"{o:.4f}" if o is not None else "-"
        lines.append(f"{name:<{width}s} {b_txt:>12s} {o_txt:>12s}")
    return "\n".join(lines) + "\n"


_EVAL_KEYS = {
    "data": REQUIRED,
    "format": "binary",
    "out": REQUIRED,
}


def cmd_eval(args: argparse.Namespace) -> int:
    args = _resolve(args, _EVAL_KEYS)
    _check_required(args, ["data", "out"])
    checkpoint = nn.load_checkpoint(args.model)
    ds = dataset.load_dataset(args.data, args.format)
    model = checkpoint.model
    if ds.dim != model.config.input_dim:
        raise ValueError(
            f"checkpoint expects dim {model.config.input_dim} but dataset has dim {ds.dim}"
        )
    if ds.n_classes > model.config.output_classes:
        raise ValueError(
            f"dataset has {ds.n_classes} classes but checkpoint predicts "
            f"{model.config.output_classes}"
        )
    features = checkpoint.scaler.apply(ds.features) if checkpoint.scaler else ds.features
    probs = nn.forward(model, features, mode="infer")
    predicted = np.argmax(probs, axis=1)
    names = checkpoint.class_names or ds.class_names
    report = metrics.full_report(probs, predicted, ds.labels, model.config.output_classes, names)
    os.makedirs(args.out, exist_ok=True)
    metrics.write_report_files(
        report, args.out, training_accuracy=checkpoint.training_accuracy, svg=args.svg
    )
    print(format_report_summary(report))
    print(f"report written to {args.out}")
    return EXIT_OK


def format_report_summary(report: metrics.EvaluationReport) -> str:
    cls = report.classification
    return (
        f"accuracy {cls.accuracy:.4f}, macro F1 {cls.macro_f1:.4f}, "
        f"kappa {cls.kappa:.4f}, macro AUC {report.auc.macro:.4f}, loss {report.mean_loss:.4f}"
    )


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="densehawk",
        description="Dense classifier training with Harris Hawks hyperparameter search",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p: argparse.ArgumentParser, seeded: bool = True) -> None:
        p.add_argument("--config", help="key = value settings file; flags override it")
        p.add_argument("--out", help="output path")
        p.add_argument(
            "--jobs", type=_positive_int,
            help="worker count (only optimize parallelizes; default 1)",
        )
        if seeded:
            p.add_argument("--seed", type=int, help="PRNG seed (required)")

    synth = sub.add_parser("synth", help="synthesize a Gaussian-blob feature file")
    add_shared(synth)
    synth.add_argument("--per-class", dest="per_class", type=_positive_int)
    synth.add_argument("--dim", type=_positive_int)
    synth.add_argument("--classes", type=_positive_int)
    synth.add_argument("--separation", type=float)
    synth.add_argument("--noise", type=float)
    synth.add_argument("--format", choices=["binary", "csv"])
    synth.set_defaults(func=cmd_synth)

    train = sub.add_parser("train", help="train the baseline (or overridden) network")
    add_shared(train)
    train.add_argument("--data", help="feature file to train on")
    train.add_argument("--format", choices=["binary", "csv"])
    train.add_argument("--ratios", type=_ratios, help="train,val,test ratios")
    train.add_argument("--normalize", choices=["none", "zscore"])
    train.add_argument("--hidden", type=_widths, help="hidden widths, e.g. 256,128,64")
    train.add_argument("--dropout", type=float)
    train.add_argument("--lr", type=float)
    train.add_argument("--batch", type=_positive_int)
    train.add_argument("--epochs", type=int)
    train.add_argument("--hyperparams", help="best-config file from the optimize command")
    train.add_argument("--svg", action="store_true", help="emit a confusion-matrix SVG")
    train.set_defaults(func=cmd_train)

    optimize = sub.add_parser("optimize", help="HHO hyperparameter search plus final training")
    add_shared(optimize)
    optimize.add_argument("--data")
    optimize.add_argument("--format", choices=["binary", "csv"])
    optimize.add_argument("--ratios", type=_ratios)
    optimize.add_argument("--normalize", choices=["none", "zscore"])
    optimize.add_argument("--hawks", type=_positive_int)
    optimize.add_argument("--iters", type=_positive_int)
    optimize.add_argument("--epoch-budget", dest="epoch_budget", type=_positive_int)
    optimize.add_argument("--lambda-loss", dest="lambda_loss", type=float)
    optimize.add_argument("--final-epochs", dest="final_epochs", type=int)
    optimize.add_argument("--compare", help="baseline metrics.csv for a side-by-side table")
    optimize.add_argument("--svg", action="store_true")
    optimize.set_defaults(func=cmd_optimize)

    evaluate = sub.add_parser("eval", help="evaluate a checkpoint on a feature file")
    add_shared(evaluate, seeded=False)
    evaluate.add_argument("--model", required=True, help="model checkpoint (.lymm)")
    evaluate.add_argument("--data")
    evaluate.add_argument("--format", choices=["binary", "csv"])
    evaluate.add_argument("--svg", action="store_true")
    evaluate.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:  # argparse handles usage errors itself
        return EXIT_USAGE if exit_.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except nn.TrainingDivergedError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except dataset.FormatError as err:
        print(f"format error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        print(f"validation error: {err}", file=sys.stderr)
        return EXIT_VALIDATION


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
