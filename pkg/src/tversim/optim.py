"""First-order optimizers with box projection.

Three update families, applied per named parameter:

* ``sgd_nesterov``: ``v <- mu*v + g``, step along ``g + mu*v``.
* ``adagrad``: ``G <- G + g^2``, step ``lr * g / sqrt(G + eps)``.
* ``adam``: bias-corrected first/second moments, step
  ``lr * m_hat / (sqrt(v_hat) + eps)``.

Every step projects the result back onto the family's box (``[0, 1]`` for
ratio-model parameters, ``[0, 1e6]`` for baseline weights). A weight vector
that clamps entirely below the degeneracy floor gets its largest entry (last
one on ties) raised to the floor. Symmetric ratio measures are optimized
through the single shared coefficient and mirrored bitwise into ``beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from tversim.measures import (
    BASELINE_WEIGHT_MAX,
    EPSILON_W,
    BaselineParams,
    TverskyParams,
)

__all__ = [
    "OPTIMIZER_FAMILIES",
    "OptimizerConfig",
    "OptimizerState",
    "default_optimizer_config",
    "project",
    "step",
]

OPTIMIZER_FAMILIES = ("sgd_nesterov", "adagrad", "adam")


@dataclass(frozen=True)
class OptimizerConfig:
    family: str
    learning_rate: float
    momentum: float = 0.9
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.family not in OPTIMIZER_FAMILIES:
            raise ValueError(
                f"unknown optimizer family '{self.family}'; expected one of {OPTIMIZER_FAMILIES}"
            )
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0.0):
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate!r}")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise ValueError(f"epsilon must be > 0, got {self.epsilon!r}")
        for name in ("momentum", "adam_beta1", "adam_beta2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 <= value < 1.0):
                raise ValueError(f"{name} must be in [0, 1), got {value!r}")


@dataclass
class OptimizerState:
    """Per-parameter accumulators, created lazily on the first step."""

    slots: dict = field(default_factory=dict)
    step_count: int = 0


def default_optimizer_config(measure_family: str) -> OptimizerConfig:
    """Optimizer assignment per measure family: Nesterov SGD at 0.01 for ts,
    Adagrad at 0.01 for wts, Adam at 0.001 for the baselines."""
    if measure_family == "ts":
        return OptimizerConfig("sgd_nesterov", learning_rate=0.01)
    if measure_family == "wts":
        return OptimizerConfig("adagrad", learning_rate=0.01)
    if measure_family in ("euclidean", "cosine"):
        return OptimizerConfig("adam", learning_rate=0.001)
    raise ValueError(f"unknown measure family '{measure_family}'")


def _free_values(params) -> dict[str, np.ndarray]:
    if isinstance(params, TverskyParams):
        out = {"alpha": np.asarray(np.float64(params.alpha))}
        if not params.symmetric:
            out["beta"] = np.asarray(np.float64(params.beta))
        if params.weights is not None:
            out["weights"] = np.array(params.weights)
        return out
    if isinstance(params, BaselineParams):
        return {"weights": np.array(params.weights)}
    raise TypeError(f"unsupported parameter bundle {type(params).__name__}")


def _rescue_degenerate(weights: np.ndarray) -> np.ndarray:
    if weights.size and np.all(weights < EPSILON_W):
        weights = weights.copy()
        last_max = weights.size - 1 - int(np.argmax(weights[::-1]))
        weights[last_max] = EPSILON_W
    return weights


def _rebuild_projected(params, values: dict) -> TverskyParams | BaselineParams:
    if isinstance(params, TverskyParams):
        alpha = min(max(float(values.get("alpha", params.alpha)), 0.0), 1.0)
        if params.symmetric:
            beta = alpha
        else:
            beta = min(max(float(values.get("beta", params.beta)), 0.0), 1.0)
        weights = params.weights
        if weights is not None:
            weights = np.clip(np.asarray(values.get("weights", weights), np.float64), 0.0, 1.0)
            weights = _rescue_degenerate(weights)
        return TverskyParams(alpha, beta, weights, params.symmetric)
    weights = np.clip(
        np.asarray(values.get("weights", params.weights), np.float64),
        0.0,
        BASELINE_WEIGHT_MAX,
    )
    return BaselineParams(_rescue_degenerate(weights))


def project(params) -> TverskyParams | BaselineParams:
    """Clamp a parameter bundle componentwise onto its family's box.

    A ratio-model or baseline weight vector left entirely below the degeneracy
    floor gets its largest entry raised to the floor (ties: last index).
    """
    for name, value in _free_values(params).items():
        if not np.all(np.isfinite(value)):
            raise ValueError(f"non-finite value in parameter '{name}'")
    if isinstance(params, TverskyParams) and not math.isfinite(params.beta):
        raise ValueError("non-finite value in parameter 'beta'")
    return _rebuild_projected(params, {})


def step(params, grads: dict, state: OptimizerState, cfg: OptimizerConfig):
    """One projected optimizer update; returns ``(new_params, new_state)``.

    ``grads`` must supply one finite entry per learnable parameter, with
    matching shapes. The input bundle and state are not modified.
    """
    values = _free_values(params)
    new_slots: dict[str, dict[str, np.ndarray]] = {}
    t = state.step_count + 1
    updated: dict[str, np.ndarray] = {}
    for name, value in values.items():
        if name not in grads:
            raise ValueError(f"missing gradient for parameter '{name}'")
        grad = np.asarray(grads[name], dtype=np.float64)
        if grad.shape != value.shape:
            raise ValueError(
                f"gradient for parameter '{name}' has shape {grad.shape}, expected {value.shape}"
            )
        if not np.all(np.isfinite(grad)):
            raise ValueError(f"non-finite gradient for parameter '{name}'")
        slot = state.slots.get(name, {})
        if cfg.family == "sgd_nesterov":
            velocity = cfg.momentum * slot.get("velocity", np.zeros_like(value)) + grad
            updated[name] = value - cfg.learning_rate * (grad + cfg.momentum * velocity)
            new_slots[name] = {"velocity": velocity}
        elif cfg.family == "adagrad":
            sq_sum = slot.get("sq_sum", np.zeros_like(value)) + grad * grad
            updated[name] = value - cfg.learning_rate * grad / np.sqrt(sq_sum + cfg.epsilon)
            new_slots[name] = {"sq_sum": sq_sum}
        else:
            m = cfg.adam_beta1 * slot.get("m", np.zeros_like(value)) + (1.0 - cfg.adam_beta1) * grad
            v = cfg.adam_beta2 * slot.get("v", np.zeros_like(value)) + (1.0 - cfg.adam_beta2) * (
                grad * grad
            )
            m_hat = m / (1.0 - cfg.adam_beta1**t)
            v_hat = v / (1.0 - cfg.adam_beta2**t)
            updated[name] = value - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
            new_slots[name] = {"m": m, "v": v}
    return _rebuild_projected(params, updated), OptimizerState(new_slots, t)
