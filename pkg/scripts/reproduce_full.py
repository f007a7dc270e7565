#!/usr/bin/env python3
"""Desk-scale reproduction runner for the two public attribute datasets.

Prepares splits per the documented protocol, fits every measure family with a
validation-selected margin, and prints one result line per family:

    python3 scripts/reproduce_full.py --sun data/sun.csv
    python3 scripts/reproduce_full.py \
        --apascal-train data/apascal_train.csv --apascal-test data/apascal_test.csv

The Sun CSV is split 70/10/20; the a-Pascal files keep their predefined
train/test split and carve 10% of the training items out for validation.
Evaluation samples 6M (Sun) or 4M (a-Pascal) balanced pairs. See
docs/datasets.md for how to produce the CSVs.
"""

import argparse
import sys
import time

from tversim.data import SplitSpec, load_item_set, split_items
from tversim.evaluation import EvalConfig, evaluate, result_line, tune_threshold
from tversim.measures import make_measure
from tversim.trainer import DEFAULT_MARGIN_GRID, TrainConfig, search_margin

FAMILIES = ("ts", "wts", "euclidean", "cosine")


def run_protocol(name, train_set, val_set, test_set, n_triplets, args):
    print(f"== {name}: train={len(train_set)} val={len(val_set)} test={len(test_set)} "
          f"m={train_set.num_features}")
    margins = tuple(float(v) for v in args.margins.split(","))
    for family in FAMILIES:
        started = time.time()
        symmetric = family in ("ts", "wts")
        cfg = TrainConfig(
            max_iterations=args.max_iters,
            batch_size=args.batch_size,
            seed=args.seed,
            val_sample_pairs=args.val_pairs,
        )
        margin, report = search_margin(
            train_set, val_set, family, cfg, margins=margins, symmetric=symmetric
        )
        measure = make_measure(family, report.best_params)
        threshold = tune_threshold(
            measure, val_set, EvalConfig(n_triplets=args.tune_pairs, seed=args.seed)
        )
        result = evaluate(
            measure, threshold, test_set, EvalConfig(n_triplets=n_triplets, seed=args.seed)
        )
        line = result_line(family, result, n_triplets, args.seed)
        print(f"{line} margin={margin} val_acc={report.best_val_accuracy:.4f} "
              f"runtime={time.time() - started:.0f}s")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sun", help="Sun attributes CSV (single file, split 70/10/20)")
    parser.add_argument("--apascal-train", help="a-Pascal training CSV (predefined split)")
    parser.add_argument("--apascal-test", help="a-Pascal test CSV (predefined split)")
    parser.add_argument("--seed", type=int, default=202)
    parser.add_argument("--max-iters", type=int, default=2000)
    parser.add_argument("--batch-size", type=int, default=128)
    parser.add_argument("--val-pairs", type=int, default=50_000)
    parser.add_argument("--tune-pairs", type=int, default=1_000_000)
    parser.add_argument("--margins", default=",".join(str(m) for m in DEFAULT_MARGIN_GRID))
    args = parser.parse_args(argv)

    if not args.sun and not (args.apascal_train and args.apascal_test):
        parser.error("provide --sun and/or both --apascal-train and --apascal-test")

    if args.sun:
        items = load_item_set(args.sun)
        parts = split_items(items, SplitSpec(0.7, 0.1, 0.2, seed=args.seed))
        run_protocol("sun", *parts, n_triplets=6_000_000, args=args)

    if args.apascal_train and args.apascal_test:
        pre_train = load_item_set(args.apascal_train)
        test_set = load_item_set(args.apascal_test)
        train_set, val_set, _ = split_items(pre_train, SplitSpec(0.9, 0.1, 0.0, seed=args.seed))
        run_protocol("apascal", train_set, val_set, test_set, n_triplets=4_000_000, args=args)

    return 0


if __name__ == "__main__":
    sys.exit(main())
