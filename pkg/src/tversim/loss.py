"""Margin contrastive loss and the mini-batch training objective.

The per-pair loss is ``s * (1 - s_hat) + (1 - s) * max(margin - 1 + s_hat, 0)``:
positives are penalized linearly below a perfect score, negatives only once
their score exceeds ``1 - margin``. The batch objective averages per-pair
losses (so the learning rate is decoupled from the batch size) and adds
optional L1/L2 penalties on the learnable parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tversim.data import PairExample
from tversim.measures import SimilarityMeasure

__all__ = [
    "LossConfig",
    "batch_objective",
    "contrastive_loss",
    "contrastive_loss_grad",
    "default_loss_config",
]


@dataclass(frozen=True)
class LossConfig:
    margin: float
    l1_coeff: float = 0.0
    l2_coeff: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.margin) and 0.0 < self.margin <= 1.0):
            raise ValueError(f"margin must be in (0, 1], got {self.margin!r}")
        for name in ("l1_coeff", "l2_coeff"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


def default_loss_config(family: str, margin: float = 0.5) -> LossConfig:
    """Per-family defaults: L1/L2 penalties of 1e-4 for the euclidean and
    cosine baselines, no regularization for the ratio families."""
    if family in ("euclidean", "cosine"):
        return LossConfig(margin=margin, l1_coeff=1e-4, l2_coeff=1e-4)
    return LossConfig(margin=margin)


def _check_loss_inputs(s, s_hat, margin):
    if s not in (0, 1):
        raise ValueError(f"label s must be 0 or 1, got {s!r}")
    if not 0.0 <= s_hat <= 1.0:
        raise ValueError(f"predicted similarity must be in [0, 1], got {s_hat!r}")
    if not 0.0 < margin <= 1.0:
        raise ValueError(f"margin must be in (0, 1], got {margin!r}")


def contrastive_loss(s: int, s_hat: float, margin: float) -> float:
    """``s*(1 - s_hat) + (1 - s)*max(margin - 1 + s_hat, 0)``."""
    _check_loss_inputs(s, s_hat, margin)
    if s == 1:
        return 1.0 - s_hat
    return max(margin - 1.0 + s_hat, 0.0)


def contrastive_loss_grad(s: int, s_hat: float, margin: float) -> float:
    """Subgradient of the loss with respect to ``s_hat``; 0 at the hinge kink."""
    _check_loss_inputs(s, s_hat, margin)
    if s == 1:
        return -1.0
    return 1.0 if margin - 1.0 + s_hat > 0.0 else 0.0


def _stack_batch(batch):
    pairs = list(batch)
    if not pairs:
        raise ValueError("batch must be non-empty")
    for pair in pairs:
        if not isinstance(pair, PairExample):
            raise TypeError(f"batch entries must be PairExample, got {type(pair).__name__}")
    X = np.stack([pair.x for pair in pairs])
    Y = np.stack([pair.y for pair in pairs])
    s = np.array([pair.s for pair in pairs], dtype=np.int8)
    return X, Y, s


def batch_objective(batch, measure: SimilarityMeasure, cfg: LossConfig):
    """Mean contrastive loss over the batch plus penalties, with its gradient.

    Returns ``(objective, grads)`` where ``grads`` maps each learnable
    parameter name to ``d(objective)/d(parameter)``, assembled by the chain
    rule from per-pair loss subgradients and the measure's score gradients.
    The loss mean uses exact summation so it is reduction-order independent
    and unchanged under power-of-two batch duplication.
    """
    X, Y, s = _stack_batch(batch)
    n = len(s)
    scores = measure.score_batch(X, Y)
    positive = s == 1
    losses = np.where(positive, 1.0 - scores, np.maximum(cfg.margin - 1.0 + scores, 0.0))
    dloss = np.where(positive, -1.0, (cfg.margin - 1.0 + scores > 0.0).astype(np.float64))
    objective = math.fsum(losses) / n
    partials = measure.grad_batch(X, Y)
    grads: dict[str, np.ndarray] = {}
    for name, partial in partials.items():
        if partial.ndim == 1:
            grads[name] = np.float64(np.mean(dloss * partial))
        else:
            grads[name] = np.mean(dloss[:, None] * partial, axis=0)
    if cfg.l1_coeff > 0.0 or cfg.l2_coeff > 0.0:
        for name, value in measure.free_params().items():
            value = np.asarray(value, dtype=np.float64)
            objective += cfg.l1_coeff * float(np.abs(value).sum())
            objective += cfg.l2_coeff * float((value * value).sum())
            grads[name] = grads[name] + cfg.l1_coeff * np.sign(value) + 2.0 * cfg.l2_coeff * value
    return objective, grads
