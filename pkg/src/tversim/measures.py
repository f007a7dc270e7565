"""Similarity measures over binary feature vectors, with parameter gradients.

Four families share one interface:

* ``ts``: ratio-model set similarity ``c / (c + alpha*a + beta*b)`` where
  ``c``, ``a``, ``b`` count shared, x-only, and y-only features. With
  ``alpha = beta = 1`` this is the Jaccard coefficient; ``alpha = beta = 1/2``
  gives Dice. ``alpha != beta`` makes the measure asymmetric.
* ``wts``: the same ratio with a per-feature weight ``w_i`` in [0, 1] inside
  each count. Uniform weights reduce it to ``ts`` exactly.
* ``euclidean``: weighted Euclidean distance mapped to a similarity through
  ``1 / (1 + d)``.
* ``cosine``: weighted cosine similarity, with the weight applied inside both
  the inner product and the norms so the score stays in [0, 1].

Features absent from both inputs never influence the ratio families: the
single-pair paths sum only over positions active in either input, so padding
two vectors with shared zeros leaves the score bitwise unchanged. Pairs with
no relevant features at all (zero denominator, or two zero-norm inputs for
cosine) score 1.0 by convention and are flagged as degenerate.

All score and gradient functions are pure; parameter bundles are immutable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from tversim.data import as_feature_vector

__all__ = [
    "BASELINE_WEIGHT_MAX",
    "EPSILON_W",
    "BaselineGrad",
    "BaselineParams",
    "CosineMeasure",
    "DegenerateScoreWarning",
    "EuclideanMeasure",
    "MEASURE_FAMILIES",
    "SimilarityMeasure",
    "TverskyGrad",
    "TverskyMeasure",
    "TverskyParams",
    "baseline_grad",
    "cosine_score",
    "euclidean_score",
    "make_measure",
    "tversky_grad",
    "tversky_score",
]

MEASURE_FAMILIES = ("ts", "wts", "euclidean", "cosine")

# Smallest admissible maximum feature weight; rules out identically-zero measures.
EPSILON_W = 1e-6

# Box upper bound for the baseline weights (ratio-family weights live in [0, 1]).
BASELINE_WEIGHT_MAX = 1e6


class DegenerateScoreWarning(UserWarning):
    """A pair had no relevant features; the score fell back to the convention."""


def _validate_weight_vector(weights) -> np.ndarray:
    arr = np.array(weights, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"weights must be a non-empty 1-D sequence, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("weights must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TverskyParams:
    """Ratio-model parameters: distinctive-feature coefficients and optional
    per-feature weights. ``symmetric`` pins ``beta`` to ``alpha``.

    Construction checks structure (finiteness, shapes, the symmetric tie);
    :meth:`validate` additionally enforces the admissible ranges, which lets
    projection accept out-of-box intermediate values.
    """

    alpha: float
    beta: float
    weights: np.ndarray | None = None
    symmetric: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")
        if self.symmetric and self.beta != self.alpha:
            raise ValueError(
                f"symmetric measure requires beta == alpha, got {self.alpha!r} and {self.beta!r}"
            )
        if self.weights is not None:
            object.__setattr__(self, "weights", _validate_weight_vector(self.weights))

    def validate(self) -> "TverskyParams":
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if self.weights is not None:
            if np.any(self.weights < 0.0) or np.any(self.weights > 1.0):
                raise ValueError("feature weights must lie in [0, 1]")
            if float(self.weights.max()) < EPSILON_W:
                raise ValueError(
                    f"at least one feature weight must be >= {EPSILON_W}; "
                    f"the measure would be degenerate"
                )
        return self


@dataclass(frozen=True, eq=False)
class BaselineParams:
    """Per-feature weights for the Euclidean and cosine baselines."""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _validate_weight_vector(self.weights))

    def validate(self) -> "BaselineParams":
        if np.any(self.weights < 0.0):
            raise ValueError("baseline weights must be >= 0")
        if np.any(self.weights > BASELINE_WEIGHT_MAX):
            raise ValueError(f"baseline weights must be <= {BASELINE_WEIGHT_MAX:g}")
        if float(self.weights.max()) < EPSILON_W:
            raise ValueError(
                f"at least one baseline weight must be >= {EPSILON_W}; "
                f"the measure would be degenerate"
            )
        return self


@dataclass(frozen=True, eq=False)
class TverskyGrad:
    """Partials of the ratio-model score. With the symmetric flag, d_alpha and
    d_beta both carry the combined derivative of the single shared coefficient.
    Features inactive in both inputs get zero weight partials."""

    d_alpha: float
    d_beta: float
    d_weights: np.ndarray | None
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class BaselineGrad:
    """Per-weight partials of a baseline similarity score."""

    d_weights: np.ndarray
    degenerate: bool = False


def _validated_pair(x, y, weights: np.ndarray | None):
    x = as_feature_vector(x)
    y = as_feature_vector(y, m=x.shape[0])
    if weights is not None and weights.shape[0] != x.shape[0]:
        raise ValueError(
            f"weights have length {weights.shape[0]}, feature vectors have length {x.shape[0]}"
        )
    return x, y


def _pair_terms(x: np.ndarray, y: np.ndarray, weights: np.ndarray | None):
    """Weighted (common, x-only, y-only) masses over features active in x or y.

    Summing only over active positions makes the score exactly invariant to
    features that are zero in both inputs.
    """
    active = (x != 0.0) | (y != 0.0)
    xa = x[active]
    ya = y[active]
    common = xa * ya
    x_only = xa - common
    y_only = ya - common
    if weights is None:
        return float(common.sum()), float(x_only.sum()), float(y_only.sum()), active
    wa = weights[active]
    return float(wa @ common), float(wa @ x_only), float(wa @ y_only), active


def tversky_score(x, y, p: TverskyParams) -> float:
    """Ratio-model similarity of two binary vectors under parameters ``p``.

    Unweighted parameters score ``c / (c + alpha*a + beta*b)`` over feature
    counts; weights, when present, scale each feature's contribution to all
    three masses. Returns 1.0 (and warns) when the denominator is zero.
    """
    p.validate()
    x, y = _validated_pair(x, y, p.weights)
    c, a, b, _ = _pair_terms(x, y, p.weights)
    # The distinctive terms are grouped so that swapping x and y under
    # alpha == beta only commutes one addition, keeping symmetry bitwise.
    den = c + (p.alpha * a + p.beta * b)
    if den == 0.0:
        warnings.warn(
            "pair has no relevant features; score is 1.0 by convention",
            DegenerateScoreWarning,
            stacklevel=2,
        )
        return 1.0
    return c / den


def tversky_grad(x, y, p: TverskyParams) -> TverskyGrad:
    """Exact partial derivatives of :func:`tversky_score` at ``p``.

    A zero denominator yields an all-zero gradient flagged ``degenerate``.
    """
    p.validate()
    x, y = _validated_pair(x, y, p.weights)
    c, a, b, active = _pair_terms(x, y, p.weights)
    den = c + (p.alpha * a + p.beta * b)
    if den == 0.0:
        zeros = np.zeros(x.shape[0]) if p.weights is not None else None
        return TverskyGrad(0.0, 0.0, zeros, degenerate=True)
    den_sq = den * den
    if p.symmetric:
        combined = -c * (a + b) / den_sq
        d_alpha = d_beta = combined
    else:
        d_alpha = -c * a / den_sq
        d_beta = -c * b / den_sq
    d_weights = None
    if p.weights is not None:
        xa = x[active]
        ya = y[active]
        common = xa * ya
        x_only = xa - common
        y_only = ya - common
        local = (common * den - c * (common + p.alpha * x_only + p.beta * y_only)) / den_sq
        d_weights = np.zeros(x.shape[0])
        d_weights[active] = local
    return TverskyGrad(d_alpha, d_beta, d_weights, degenerate=False)


def euclidean_score(x, y, p: BaselineParams) -> float:
    """Weighted Euclidean distance mapped to ``1 / (1 + d)``."""
    p.validate()
    x, y = _validated_pair(x, y, p.weights)
    diff_sq = (x - y) ** 2
    d = math.sqrt(float(p.weights @ diff_sq))
    return 1.0 / (1.0 + d)


def cosine_score(x, y, p: BaselineParams) -> float:
    """Weighted cosine similarity ``<x, y>_w / (|x|_w |y|_w)``.

    Both weighted norms zero scores 1.0 (and warns); exactly one zero norm
    scores 0.0.
    """
    p.validate()
    x, y = _validated_pair(x, y, p.weights)
    w = p.weights
    inner = float(w @ (x * y))
    # x_i^2 == x_i for binary inputs
    norm_x_sq = float(w @ x)
    norm_y_sq = float(w @ y)
    if norm_x_sq == 0.0 and norm_y_sq == 0.0:
        warnings.warn(
            "both inputs have zero weighted norm; score is 1.0 by convention",
            DegenerateScoreWarning,
            stacklevel=2,
        )
        return 1.0
    if norm_x_sq == 0.0 or norm_y_sq == 0.0:
        return 0.0
    return inner / math.sqrt(norm_x_sq * norm_y_sq)


def baseline_grad(x, y, p: BaselineParams, family: str) -> BaselineGrad:
    """Exact per-weight partials of the chosen baseline score.

    Degenerate inputs (zero distance for Euclidean, a zero weighted norm for
    cosine) yield a zero gradient flagged ``degenerate``.
    """
    if family not in ("euclidean", "cosine"):
        raise ValueError(f"unknown baseline family '{family}'")
    p.validate()
    x, y = _validated_pair(x, y, p.weights)
    w = p.weights
    if family == "euclidean":
        diff_sq = (x - y) ** 2
        d = math.sqrt(float(w @ diff_sq))
        if d == 0.0:
            return BaselineGrad(np.zeros(x.shape[0]), degenerate=True)
        scale = -1.0 / ((1.0 + d) ** 2 * 2.0 * d)
        return BaselineGrad(scale * diff_sq, degenerate=False)
    inner = float(w @ (x * y))
    norm_x_sq = float(w @ x)
    norm_y_sq = float(w @ y)
    if norm_x_sq == 0.0 or norm_y_sq == 0.0:
        return BaselineGrad(np.zeros(x.shape[0]), degenerate=True)
    prod = norm_x_sq * norm_y_sq
    root = math.sqrt(prod)
    d_weights = (x * y) / root - inner * (x * norm_y_sq + y * norm_x_sq) / (2.0 * prod * root)
    return BaselineGrad(d_weights, degenerate=False)


def _check_batch(X, Y, m: int | None):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.shape != X.shape:
        raise ValueError(f"batch inputs must be matching 2-D arrays, got {X.shape} and {Y.shape}")
    if m is not None and X.shape[1] != m:
        raise ValueError(f"batch has {X.shape[1]} features, measure expects {m}")
    return X, Y


class SimilarityMeasure:
    """Common interface: a family tag plus scoring and gradient operations.

    ``score`` handles a single pair; ``score_batch``/``grad_batch`` operate on
    row-aligned (n, m) matrices. ``grad_batch`` returns per-pair partials for
    every learnable parameter, keyed like :meth:`free_params`; degenerate rows
    contribute zero gradient. All operations are pure.
    """

    family: str

    def score(self, x, y) -> float:
        raise NotImplementedError

    def score_batch(self, X, Y) -> np.ndarray:
        raise NotImplementedError

    def grad_batch(self, X, Y) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def free_params(self) -> dict[str, np.ndarray]:
        raise NotImplementedError


class TverskyMeasure(SimilarityMeasure):
    """Ratio-model measure; family ``ts`` unweighted, ``wts`` weighted."""

    def __init__(self, params: TverskyParams):
        self.params = params.validate()

    @property
    def family(self) -> str:
        return "wts" if self.params.weights is not None else "ts"

    def score(self, x, y) -> float:
        return tversky_score(x, y, self.params)

    def _batch_terms(self, X, Y):
        p = self.params
        X, Y = _check_batch(X, Y, None if p.weights is None else p.weights.shape[0])
        common = X * Y
        if p.weights is None:
            c = common.sum(axis=1)
            a = (X - common).sum(axis=1)
            b = (Y - common).sum(axis=1)
        else:
            c = common @ p.weights
            a = (X - common) @ p.weights
            b = (Y - common) @ p.weights
        den = c + (p.alpha * a + p.beta * b)
        return X, Y, common, c, a, b, den

    def score_batch(self, X, Y) -> np.ndarray:
        _, _, _, c, _, _, den = self._batch_terms(X, Y)
        degenerate = den == 0.0
        return np.where(degenerate, 1.0, c / np.where(degenerate, 1.0, den))

    def grad_batch(self, X, Y) -> dict[str, np.ndarray]:
        p = self.params
        X, Y, common, c, a, b, den = self._batch_terms(X, Y)
        ok = den > 0.0
        den_sq = np.where(ok, den, 1.0) ** 2
        out: dict[str, np.ndarray] = {}
        if p.symmetric:
            out["alpha"] = np.where(ok, -c * (a + b) / den_sq, 0.0)
        else:
            out["alpha"] = np.where(ok, -c * a / den_sq, 0.0)
            out["beta"] = np.where(ok, -c * b / den_sq, 0.0)
        if p.weights is not None:
            numer = common * den[:, None] - c[:, None] * (
                common + p.alpha * (X - common) + p.beta * (Y - common)
            )
            out["weights"] = np.where(ok[:, None], numer / den_sq[:, None], 0.0)
        return out

    def free_params(self) -> dict[str, np.ndarray]:
        p = self.params
        out: dict[str, np.ndarray] = {"alpha": np.float64(p.alpha)}
        if not p.symmetric:
            out["beta"] = np.float64(p.beta)
        if p.weights is not None:
            out["weights"] = p.weights
        return out


class EuclideanMeasure(SimilarityMeasure):
    """Weighted Euclidean distance baseline, similarity ``1 / (1 + d)``."""

    family = "euclidean"

    def __init__(self, params: BaselineParams):
        self.params = params.validate()

    def score(self, x, y) -> float:
        return euclidean_score(x, y, self.params)

    def score_batch(self, X, Y) -> np.ndarray:
        X, Y = _check_batch(X, Y, self.params.weights.shape[0])
        d = np.sqrt((X - Y) ** 2 @ self.params.weights)
        return 1.0 / (1.0 + d)

    def grad_batch(self, X, Y) -> dict[str, np.ndarray]:
        X, Y = _check_batch(X, Y, self.params.weights.shape[0])
        diff_sq = (X - Y) ** 2
        d = np.sqrt(diff_sq @ self.params.weights)
        ok = d > 0.0
        safe_d = np.where(ok, d, 1.0)
        scale = np.where(ok, -1.0 / ((1.0 + safe_d) ** 2 * 2.0 * safe_d), 0.0)
        return {"weights": scale[:, None] * diff_sq}

    def free_params(self) -> dict[str, np.ndarray]:
        return {"weights": self.params.weights}


class CosineMeasure(SimilarityMeasure):
    """Weighted cosine baseline with the weight inside norms and inner product."""

    family = "cosine"

    def __init__(self, params: BaselineParams):
        self.params = params.validate()

    def score(self, x, y) -> float:
        return cosine_score(x, y, self.params)

    def score_batch(self, X, Y) -> np.ndarray:
        w = self.params.weights
        X, Y = _check_batch(X, Y, w.shape[0])
        inner = (X * Y) @ w
        norm_x_sq = X @ w
        norm_y_sq = Y @ w
        both_zero = (norm_x_sq == 0.0) & (norm_y_sq == 0.0)
        any_zero = (norm_x_sq == 0.0) | (norm_y_sq == 0.0)
        prod = np.where(any_zero, 1.0, norm_x_sq * norm_y_sq)
        scores = inner / np.sqrt(prod)
        return np.where(both_zero, 1.0, np.where(any_zero, 0.0, scores))

    def grad_batch(self, X, Y) -> dict[str, np.ndarray]:
        w = self.params.weights
        X, Y = _check_batch(X, Y, w.shape[0])
        inner = (X * Y) @ w
        norm_x_sq = X @ w
        norm_y_sq = Y @ w
        ok = (norm_x_sq > 0.0) & (norm_y_sq > 0.0)
        prod = np.where(ok, norm_x_sq * norm_y_sq, 1.0)
        root = np.sqrt(prod)
        grads = (X * Y) / root[:, None] - inner[:, None] * (
            X * norm_y_sq[:, None] + Y * norm_x_sq[:, None]
        ) / (2.0 * prod * root)[:, None]
        return {"weights": np.where(ok[:, None], grads, 0.0)}

    def free_params(self) -> dict[str, np.ndarray]:
        return {"weights": self.params.weights}


def make_measure(family: str, params) -> SimilarityMeasure:
    """Build the measure for a family tag, checking the parameter bundle kind."""
    if family in ("ts", "wts"):
        if not isinstance(params, TverskyParams):
            raise TypeError(f"family '{family}' requires TverskyParams, got {type(params).__name__}")
        if family == "ts" and params.weights is not None:
            raise ValueError("family 'ts' is unweighted; use 'wts' for weighted parameters")
        if family == "wts" and params.weights is None:
            raise ValueError("family 'wts' requires a weight vector")
        return TverskyMeasure(params)
    if family in ("euclidean", "cosine"):
        if not isinstance(params, BaselineParams):
            raise TypeError(f"family '{family}' requires BaselineParams, got {type(params).__name__}")
        return EuclideanMeasure(params) if family == "euclidean" else CosineMeasure(params)
    raise ValueError(f"unknown measure family '{family}'; expected one of {MEASURE_FAMILIES}")
