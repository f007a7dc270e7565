"""Command-line front end: split, train, eval, and score, plus model file I/O.

Model files are JSON documents with a declared format version. Floats are
serialized in shortest round-trip form, so reloading a model reproduces its
parameters bitwise. Exit codes: 0 success, 2 usage or validation error,
1 runtime failure; every error is a single stderr line prefixed ``error:``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from tversim.data import (
    LabeledItemSet,
    SplitSpec,
    load_item_set,
    split_items,
)
from tversim.evaluation import EvalConfig, evaluate, result_line, tune_threshold
from tversim.loss import default_loss_config
from tversim.measures import (
    MEASURE_FAMILIES,
    BaselineParams,
    DegenerateScoreWarning,
    TverskyParams,
    make_measure,
)
from tversim.optim import OPTIMIZER_FAMILIES, OptimizerConfig, default_optimizer_config
from tversim.trainer import TrainConfig, train

__all__ = ["ModelFile", "load_model", "main", "model_measure", "save_model"]

MODEL_FORMAT_VERSION = 1

_DEFAULT_LEARNING_RATES = {"sgd_nesterov": 0.01, "adagrad": 0.01, "adam": 0.001}


class UsageError(ValueError):
    """Bad flags or inputs; maps to exit code 2."""


@dataclass
class ModelFile:
    """Serialized trained measure: family, parameters, decision threshold,
    and training metadata."""

    family: str
    symmetric: bool
    alpha: float
    beta: float
    weights: list | None
    feature_names: list
    threshold: float
    margin: float
    seed: int
    iterations: int
    best_val_accuracy: float
    format_version: int = MODEL_FORMAT_VERSION

    def params(self) -> TverskyParams | BaselineParams:
        if self.family in ("ts", "wts"):
            weights = None if self.weights is None else np.array(self.weights, dtype=np.float64)
            return TverskyParams(self.alpha, self.beta, weights, self.symmetric).validate()
        return BaselineParams(np.array(self.weights, dtype=np.float64)).validate()


def model_measure(model: ModelFile):
    return make_measure(model.family, model.params())


def save_model(model: ModelFile, path) -> None:
    if model.family not in MEASURE_FAMILIES:
        raise ValueError(f"unknown measure family '{model.family}'")
    if model.weights is not None and len(model.weights) != len(model.feature_names):
        raise ValueError(
            f"model has {len(model.weights)} weights but {len(model.feature_names)} feature names"
        )
    document = {
        "format_version": model.format_version,
        "family": model.family,
        "symmetric": model.symmetric,
        "alpha": model.alpha,
        "beta": model.beta,
        "weights": model.weights,
        "feature_names": list(model.feature_names),
        "threshold": model.threshold,
        "margin": model.margin,
        "training": {
            "seed": model.seed,
            "iterations": model.iterations,
            "best_val_accuracy": model.best_val_accuracy,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=2)
        fh.write("\n")


def load_model(path) -> ModelFile:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            document = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not a valid model file: {exc}") from None
    version = document.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported model format_version {version!r}, expected {MODEL_FORMAT_VERSION}"
        )
    try:
        training = document.get("training", {})
        model = ModelFile(
            family=document["family"],
            symmetric=bool(document["symmetric"]),
            alpha=float(document["alpha"]),
            beta=float(document["beta"]),
            weights=document.get("weights"),
            feature_names=list(document["feature_names"]),
            threshold=float(document["threshold"]),
            margin=float(document["margin"]),
            seed=int(training.get("seed", 0)),
            iterations=int(training.get("iterations", 0)),
            best_val_accuracy=float(training.get("best_val_accuracy", 0.0)),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed model file ({exc})") from None
    if model.weights is not None and len(model.weights) != len(model.feature_names):
        raise ValueError(
            f"{path}: model has {len(model.weights)} weights but "
            f"{len(model.feature_names)} feature names"
        )
    model.params()  # surface invalid parameters now, with a clear source
    return model


def _write_items_csv(item_set: LabeledItemSet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label", *item_set.feature_names])
        for item in item_set.items:
            writer.writerow([item.id, item.class_label, *(int(v) for v in item.features)])


def _require_file(path) -> str:
    if not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")
    return path


def _parse_ratios(text: str):
    parts = text.split("/")
    if len(parts) != 3:
        raise UsageError(f"ratios must have the form R1/R2/R3, got '{text}'")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"ratios must be numeric, got '{text}'") from None
    if any(v < 0 for v in values):
        raise UsageError(f"ratios must be >= 0, got '{text}'")
    total = sum(values)
    if total <= 0:
        raise UsageError(f"ratios must not all be zero, got '{text}'")
    return tuple(v / total for v in values)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got '{text}'")


def _parse_row(text: str, m: int) -> np.ndarray:
    cells = [cell.strip() for cell in text.split(",")]
    if len(cells) != m:
        raise UsageError(f"row has {len(cells)} cells, model expects {m}")
    for k, cell in enumerate(cells):
        if cell not in ("0", "1"):
            raise UsageError(f"row cell {k} must be exactly 0 or 1, got '{cell}'")
    return np.fromiter((cell == "1" for cell in cells), dtype=np.float64, count=m)


def _cmd_split(args) -> int:
    items = load_item_set(_require_file(args.data))
    fractions = _parse_ratios(args.ratios)
    spec = SplitSpec(*fractions, seed=args.seed)
    train_set, val_set, test_set = split_items(items, spec)
    os.makedirs(args.out_dir, exist_ok=True)
    for name, part in (("train", train_set), ("val", val_set), ("test", test_set)):
        _write_items_csv(part, os.path.join(args.out_dir, f"{name}.csv"))
    print(f"train={len(train_set)} val={len(val_set)} test={len(test_set)}")
    return 0


def _cmd_train(args) -> int:
    if not 0.0 < args.margin <= 1.0:
        raise UsageError(f"--margin must be in (0, 1], got {args.margin}")
    if args.batch_size < 1:
        raise UsageError(f"--batch-size must be >= 1, got {args.batch_size}")
    if args.max_iters < 1:
        raise UsageError(f"--max-iters must be >= 1, got {args.max_iters}")
    if args.lr is not None and args.lr <= 0:
        raise UsageError(f"--lr must be > 0, got {args.lr}")
    if args.seed < 0:
        raise UsageError(f"--seed must be >= 0, got {args.seed}")

    train_set = load_item_set(_require_file(args.train))
    val_set = load_item_set(_require_file(args.val))
    if train_set.feature_names != val_set.feature_names:
        raise UsageError("train and validation files have different feature columns")

    base = default_optimizer_config(args.family)
    opt_family = args.optimizer if args.optimizer else base.family
    learning_rate = args.lr if args.lr is not None else _DEFAULT_LEARNING_RATES[opt_family]
    cfg = TrainConfig(
        max_iterations=args.max_iters,
        batch_size=args.batch_size,
        loss=default_loss_config(args.family, margin=args.margin),
        optimizer=OptimizerConfig(opt_family, learning_rate=learning_rate),
        eval_every=args.eval_every,
        seed=args.seed,
        val_sample_pairs=args.val_pairs,
    )
    report = train(
        train_set, val_set, args.family, cfg, symmetric=args.symmetric, progress=print
    )
    measure = make_measure(args.family, report.best_params)
    threshold = tune_threshold(
        measure, val_set, EvalConfig(n_triplets=args.val_pairs, seed=args.seed)
    )
    params = report.best_params
    if args.family in ("ts", "wts"):
        alpha, beta = params.alpha, params.beta
        weights = None if params.weights is None else [float(w) for w in params.weights]
    else:
        alpha = beta = 0.0
        weights = [float(w) for w in params.weights]
    model = ModelFile(
        family=args.family,
        symmetric=bool(args.symmetric),
        alpha=alpha,
        beta=beta,
        weights=weights,
        feature_names=list(train_set.feature_names),
        threshold=threshold,
        margin=args.margin,
        seed=args.seed,
        iterations=report.iterations_run,
        best_val_accuracy=report.best_val_accuracy,
    )
    save_model(model, args.out)
    return 0


def _cmd_eval(args) -> int:
    if args.triplets < 1:
        raise UsageError(f"--triplets must be >= 1, got {args.triplets}")
    model = load_model(_require_file(args.model))
    items = load_item_set(_require_file(args.data))
    if items.num_features != len(model.feature_names):
        raise UsageError(
            f"feature count mismatch: model has {len(model.feature_names)}, "
            f"data has {items.num_features}"
        )
    if not args.ignore_names:
        for k, (a, b) in enumerate(zip(model.feature_names, items.feature_names)):
            if a != b:
                raise UsageError(f"feature name mismatch at column {k}: model '{a}' vs data '{b}'")
    measure = model_measure(model)
    cfg = EvalConfig(n_triplets=args.triplets, seed=args.seed)
    result = evaluate(measure, model.threshold, items, cfg)
    print(result_line(model.family, result, args.triplets, args.seed))
    return 0


def _cmd_score(args) -> int:
    model = load_model(_require_file(args.model))
    m = len(model.feature_names)
    x = _parse_row(args.x, m)
    y = _parse_row(args.y, m)
    measure = model_measure(model)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateScoreWarning)
        score = measure.score(x, y)
    for warning in caught:
        if issubclass(warning.category, DegenerateScoreWarning):
            print(f"warning: {warning.message}", file=sys.stderr)
    label = "similar" if score > model.threshold else "dissimilar"
    print(f"score={score:.6f} label={label}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tversim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_split = sub.add_parser("split", help="split a dataset CSV into train/val/test files")
    p_split.add_argument("--data", required=True)
    p_split.add_argument("--out-dir", required=True)
    p_split.add_argument("--ratios", default="70/10/20")
    p_split.add_argument("--seed", type=int, default=0)
    p_split.set_defaults(func=_cmd_split)

    p_train = sub.add_parser("train", help="fit a similarity measure and write a model file")
    p_train.add_argument("--train", required=True)
    p_train.add_argument("--val", required=True)
    p_train.add_argument("--family", required=True, choices=MEASURE_FAMILIES)
    p_train.add_argument("--symmetric", type=_parse_bool, default=False)
    p_train.add_argument("--margin", type=float, default=0.5)
    p_train.add_argument("--batch-size", type=int, default=128)
    p_train.add_argument("--max-iters", type=int, default=1000)
    p_train.add_argument("--lr", type=float, default=None)
    p_train.add_argument("--optimizer", choices=OPTIMIZER_FAMILIES, default=None)
    p_train.add_argument("--eval-every", type=int, default=1)
    p_train.add_argument("--val-pairs", type=int, default=50_000)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True)
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a model file as a threshold classifier")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--triplets", type=int, default=100_000)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--ignore-names", action="store_true")
    p_eval.set_defaults(func=_cmd_eval)

    p_score = sub.add_parser("score", help="score one pair of feature rows with a model file")
    p_score.add_argument("--model", required=True)
    p_score.add_argument("--x", required=True)
    p_score.add_argument("--y", required=True)
    p_score.set_defaults(func=_cmd_score)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
