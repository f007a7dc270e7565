"""Threshold tuning and threshold-classifier evaluation over sampled pairs.

A learned measure becomes a binary classifier through ``score > t`` (strict:
scores equal to the threshold predict dissimilar). The threshold is picked on
a fixed uniform grid to maximize classification rate on a seeded balanced
sample of validation pairs; evaluation scores a disjoint seeded sample and
reports classification rate, F1 (similar = positive class), and the confusion
counts. Scoring streams in chunks so multi-million-pair samples never
materialize large intermediate matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tversim.data import LabeledItemSet, check_seed, sample_pair_indices
from tversim.measures import SimilarityMeasure

__all__ = [
    "EvalConfig",
    "EvalResult",
    "best_threshold",
    "evaluate",
    "result_line",
    "tune_threshold",
]

_CHUNK_PAIRS = 1 << 16

# Sub-stream tags so tuning and evaluation draw from disjoint streams even
# when configured with the same seed.
_TUNE_STREAM = 0
_EVAL_STREAM = 1


@dataclass(frozen=True)
class EvalConfig:
    n_triplets: int
    positive_fraction: float = 0.5
    seed: int = 0
    threshold_grid: int = 1001

    def __post_init__(self):
        if self.n_triplets < 1:
            raise ValueError(f"n_triplets must be >= 1, got {self.n_triplets}")
        if not 0.0 < self.positive_fraction < 1.0:
            raise ValueError(
                f"positive_fraction must be in (0, 1), got {self.positive_fraction!r}"
            )
        if self.threshold_grid < 2:
            raise ValueError(f"threshold_grid must be >= 2, got {self.threshold_grid}")
        check_seed(self.seed)


@dataclass(frozen=True)
class EvalResult:
    classification_rate: float
    f1: float
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int


def _result_from_counts(tp: int, fp: int, tn: int, fn: int, threshold: float) -> EvalResult:
    total = tp + fp + tn + fn
    rate = (tp + tn) / total
    f1_den = 2 * tp + fp + fn
    f1 = (2 * tp / f1_den) if f1_den else 0.0
    return EvalResult(rate, f1, threshold, tp, fp, tn, fn)


def best_threshold(scores: np.ndarray, labels: np.ndarray, grid_size: int = 1001):
    """Grid threshold maximizing accuracy of ``score > t`` over in-memory scores.

    Returns ``(threshold, accuracy)``; ties go to the smallest threshold.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    grid = np.linspace(0.0, 1.0, grid_size)
    pos_sorted = np.sort(scores[labels == 1])
    neg_sorted = np.sort(scores[labels != 1])
    pos_le = np.searchsorted(pos_sorted, grid, side="right")
    neg_le = np.searchsorted(neg_sorted, grid, side="right")
    correct = (pos_sorted.size - pos_le) + neg_le
    k = int(np.argmax(correct))
    return float(grid[k]), float(correct[k] / scores.size)


def _scored_sample_chunks(measure, items, n_pairs, positive_fraction, rng):
    i, j, s = sample_pair_indices(items, n_pairs, rng, positive_fraction)
    matrix = items.feature_matrix
    for lo in range(0, n_pairs, _CHUNK_PAIRS):
        hi = min(lo + _CHUNK_PAIRS, n_pairs)
        scores = measure.score_batch(matrix[i[lo:hi]], matrix[j[lo:hi]])
        yield scores, s[lo:hi]


def tune_threshold(measure: SimilarityMeasure, val_items: LabeledItemSet, cfg: EvalConfig) -> float:
    """Threshold maximizing classification rate on a seeded balanced sample of
    validation pairs; ties broken toward the smallest grid threshold."""
    rng = np.random.default_rng([cfg.seed, _TUNE_STREAM])
    grid = np.linspace(0.0, 1.0, cfg.threshold_grid)
    pos_le = np.zeros(cfg.threshold_grid, dtype=np.int64)
    neg_le = np.zeros(cfg.threshold_grid, dtype=np.int64)
    n_pos = 0
    for scores, labels in _scored_sample_chunks(
        measure, val_items, cfg.n_triplets, cfg.positive_fraction, rng
    ):
        pos_scores = np.sort(scores[labels == 1])
        neg_scores = np.sort(scores[labels == 0])
        pos_le += np.searchsorted(pos_scores, grid, side="right")
        neg_le += np.searchsorted(neg_scores, grid, side="right")
        n_pos += pos_scores.size
    correct = (n_pos - pos_le) + neg_le
    return float(grid[int(np.argmax(correct))])


def evaluate(
    measure: SimilarityMeasure, threshold: float, test_items: LabeledItemSet, cfg: EvalConfig
) -> EvalResult:
    """Confusion counts and metrics of ``score > threshold`` on a seeded
    balanced sample of test pairs (stream disjoint from tuning)."""
    if not (math.isfinite(threshold) and 0.0 <= threshold <= 1.0):
        raise ValueError(f"threshold must be in [0, 1], got {threshold!r}")
    rng = np.random.default_rng([cfg.seed, _EVAL_STREAM])
    tp = fp = tn = fn = 0
    for scores, labels in _scored_sample_chunks(
        measure, test_items, cfg.n_triplets, cfg.positive_fraction, rng
    ):
        predicted = scores > threshold
        positive = labels == 1
        tp += int(np.count_nonzero(predicted & positive))
        fp += int(np.count_nonzero(predicted & ~positive))
        tn += int(np.count_nonzero(~predicted & ~positive))
        fn += int(np.count_nonzero(~predicted & positive))
    return _result_from_counts(tp, fp, tn, fn, threshold)


def result_line(family: str, result: EvalResult, n_triplets: int, seed: int) -> str:
    """Machine-readable one-line evaluation record."""
    return (
        f"family={family} cr={result.classification_rate:.6f} f1={result.f1:.6f} "
        f"t={result.threshold:.6f} n={n_triplets} seed={seed}"
    )
