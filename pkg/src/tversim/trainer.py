"""Mini-batch training loop with early stopping and best-model checkpointing.

Each iteration samples a balanced batch of pairs, computes the contrastive
objective and its gradient, and applies one projected optimizer step. Every
``eval_every`` iterations the current measure is scored on a fixed, seeded
sample of validation pairs with an on-the-fly tuned threshold; the best
checkpoint is kept and training stops early once the accuracy has stayed more
than ``patience_delta`` below the best seen (or the previous evaluation, per
``stop_comparator``) for ``patience_evals`` consecutive evaluations. The
returned report always carries the best checkpoint, never the last iterate,
and its history is a pure function of the datasets, family, and config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from tversim.data import LabeledItemSet, check_seed, sample_balanced_batch, sample_pair_indices
from tversim.evaluation import best_threshold
from tversim.loss import LossConfig, batch_objective, default_loss_config
from tversim.measures import (
    BaselineParams,
    MEASURE_FAMILIES,
    TverskyParams,
    make_measure,
)
from tversim.optim import OptimizerConfig, OptimizerState, default_optimizer_config, step

__all__ = [
    "DEFAULT_MARGIN_GRID",
    "TrainConfig",
    "TrainReport",
    "initialize_params",
    "search_margin",
    "train",
]

DEFAULT_MARGIN_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

_STOP_COMPARATORS = ("best", "previous")


@dataclass(frozen=True)
class TrainConfig:
    max_iterations: int = 1000
    batch_size: int = 128
    loss: LossConfig | None = None
    optimizer: OptimizerConfig | None = None
    eval_every: int = 1
    patience_evals: int = 20
    patience_delta: float = 0.01
    seed: int = 0
    val_sample_pairs: int = 50_000
    stop_comparator: str = "best"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.patience_evals < 1:
            raise ValueError(f"patience_evals must be >= 1, got {self.patience_evals}")
        if not (math.isfinite(self.patience_delta) and self.patience_delta >= 0.0):
            raise ValueError(f"patience_delta must be >= 0, got {self.patience_delta!r}")
        if self.val_sample_pairs < 1:
            raise ValueError(f"val_sample_pairs must be >= 1, got {self.val_sample_pairs}")
        if self.stop_comparator not in _STOP_COMPARATORS:
            raise ValueError(
                f"stop_comparator must be one of {_STOP_COMPARATORS}, got {self.stop_comparator!r}"
            )
        check_seed(self.seed)


@dataclass(frozen=True, eq=False)
class TrainReport:
    best_params: TverskyParams | BaselineParams
    best_val_accuracy: float
    iterations_run: int
    stop_reason: str
    history: tuple


def initialize_params(family: str, m: int, rng: np.random.Generator, symmetric: bool = False):
    """Random initial parameters for a measure family.

    Ratio coefficients draw uniformly from (0, 1), with ``beta`` copied from
    ``alpha`` when symmetric. Weighted ratio measures draw weights from
    [0.25, 1) so early denominators stay well conditioned; baseline weights
    start at exactly 1.
    """
    if m < 1:
        raise ValueError(f"feature count must be >= 1, got {m}")
    if family in ("ts", "wts"):
        alpha = float(rng.uniform(0.0, 1.0))
        beta = alpha if symmetric else float(rng.uniform(0.0, 1.0))
        weights = rng.uniform(0.25, 1.0, size=m) if family == "wts" else None
        return TverskyParams(alpha, beta, weights, symmetric)
    if family in ("euclidean", "cosine"):
        return BaselineParams(np.ones(m))
    raise ValueError(f"unknown measure family '{family}'; expected one of {MEASURE_FAMILIES}")


def _pair_sample_evaluator(val_items: LabeledItemSet, n_pairs: int, rng: np.random.Generator):
    """Accuracy on one fixed seeded balanced sample, threshold tuned per call."""
    i, j, s = sample_pair_indices(val_items, n_pairs, rng, positive_fraction=0.5)
    matrix = val_items.feature_matrix
    X, Y = matrix[i], matrix[j]

    def evaluator(measure):
        scores = measure.score_batch(X, Y)
        _, accuracy = best_threshold(scores, s)
        return accuracy

    return evaluator


def train(
    train_items: LabeledItemSet,
    val_items: LabeledItemSet,
    family: str,
    cfg: TrainConfig,
    symmetric: bool = False,
    val_evaluator=None,
    progress=None,
) -> TrainReport:
    """Fit a measure of the given family on similar/dissimilar pairs.

    ``val_evaluator`` may replace the built-in fixed-sample validation scorer
    (it receives the current measure and returns an accuracy); ``progress``
    receives one ``iter=... objective=... val_acc=... best=...`` line per
    evaluation.
    """
    if len(train_items) == 0 or len(val_items) == 0:
        raise ValueError("train and validation item sets must be non-empty")
    if train_items.num_features != val_items.num_features:
        raise ValueError(
            f"feature counts differ: train has {train_items.num_features}, "
            f"validation has {val_items.num_features}"
        )
    if len(set(train_items.class_labels)) < 2:
        raise ValueError("training items must span at least 2 classes")

    loss_cfg = cfg.loss if cfg.loss is not None else default_loss_config(family)
    opt_cfg = cfg.optimizer if cfg.optimizer is not None else default_optimizer_config(family)
    init_rng, batch_rng, val_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3)
    )
    params = initialize_params(family, train_items.num_features, init_rng, symmetric=symmetric)
    if val_evaluator is None:
        val_evaluator = _pair_sample_evaluator(val_items, cfg.val_sample_pairs, val_rng)

    state = OptimizerState()
    best_accuracy = -math.inf
    best_params = params
    below_count = 0
    previous_accuracy = None
    history: list[tuple[int, float, float]] = []
    stop_reason = "max_iterations"
    iterations_run = 0
    objective = math.nan

    for iteration in range(1, cfg.max_iterations + 1):
        iterations_run = iteration
        batch = sample_balanced_batch(train_items, cfg.batch_size, batch_rng)
        measure = make_measure(family, params)
        objective, grads = batch_objective(batch, measure, loss_cfg)
        if not math.isfinite(objective):
            raise RuntimeError(f"non-finite training objective at iteration {iteration}")
        params, state = step(params, grads, state, opt_cfg)

        if iteration % cfg.eval_every == 0:
            accuracy = float(val_evaluator(make_measure(family, params)))
            history.append((iteration, float(objective), accuracy))
            if accuracy > best_accuracy:
                best_accuracy = accuracy
                best_params = params
            if progress is not None:
                progress(
                    f"iter={iteration} objective={objective:.6f} "
                    f"val_acc={accuracy:.6f} best={best_accuracy:.6f}"
                )
            if cfg.stop_comparator == "best":
                dropped = accuracy < best_accuracy - cfg.patience_delta
            else:
                dropped = (
                    previous_accuracy is not None
                    and accuracy < previous_accuracy - cfg.patience_delta
                )
            previous_accuracy = accuracy
            below_count = below_count + 1 if dropped else 0
            if below_count >= cfg.patience_evals:
                stop_reason = "early_stop"
                break

    if not history:
        # eval_every exceeded the horizon; evaluate the final parameters once
        # so the report invariants hold.
        accuracy = float(val_evaluator(make_measure(family, params)))
        history.append((iterations_run, float(objective), accuracy))
        best_accuracy = accuracy
        best_params = params
        if progress is not None:
            progress(
                f"iter={iterations_run} objective={objective:.6f} "
                f"val_acc={accuracy:.6f} best={best_accuracy:.6f}"
            )

    return TrainReport(
        best_params=best_params,
        best_val_accuracy=best_accuracy,
        iterations_run=iterations_run,
        stop_reason=stop_reason,
        history=tuple(history),
    )


def search_margin(
    train_items: LabeledItemSet,
    val_items: LabeledItemSet,
    family: str,
    cfg: TrainConfig,
    margins=DEFAULT_MARGIN_GRID,
    symmetric: bool = False,
):
    """Train once per candidate margin; returns ``(margin, report)`` for the
    best validation accuracy (ties go to the earlier candidate)."""
    if not margins:
        raise ValueError("margins must be non-empty")
    base_loss = cfg.loss if cfg.loss is not None else default_loss_config(family)
    best: tuple[float, TrainReport] | None = None
    for margin in margins:
        run_cfg = replace(cfg, loss=replace(base_loss, margin=margin))
        report = train(train_items, val_items, family, run_cfg, symmetric=symmetric)
        if best is None or report.best_val_accuracy > best[1].best_val_accuracy:
            best = (margin, report)
    return best
