"""Learnable set-overlap similarity over binary feature vectors.

The package fits ratio-model (Tversky-style) similarity measures, plus
weighted Euclidean and cosine baselines, from binary similar/dissimilar pair
feedback: a margin contrastive loss is minimized by projected mini-batch
gradient descent with validation-based early stopping, and the learned
measure is evaluated as a strict threshold classifier.
"""

from tversim.data import (
    LabeledItem,
    LabeledItemSet,
    PairExample,
    SplitSpec,
    as_feature_vector,
    label_pair,
    load_item_set,
    sample_balanced_batch,
    sample_pair_indices,
    split_items,
)
from tversim.evaluation import (
    EvalConfig,
    EvalResult,
    best_threshold,
    evaluate,
    result_line,
    tune_threshold,
)
from tversim.loss import (
    LossConfig,
    batch_objective,
    contrastive_loss,
    contrastive_loss_grad,
    default_loss_config,
)
from tversim.measures import (
    BASELINE_WEIGHT_MAX,
    EPSILON_W,
    BaselineGrad,
    BaselineParams,
    CosineMeasure,
    DegenerateScoreWarning,
    EuclideanMeasure,
    MEASURE_FAMILIES,
    SimilarityMeasure,
    TverskyGrad,
    TverskyMeasure,
    TverskyParams,
    baseline_grad,
    cosine_score,
    euclidean_score,
    make_measure,
    tversky_grad,
    tversky_score,
)
from tversim.optim import (
    OPTIMIZER_FAMILIES,
    OptimizerConfig,
    OptimizerState,
    default_optimizer_config,
)
from tversim.trainer import (
    DEFAULT_MARGIN_GRID,
    TrainConfig,
    TrainReport,
    initialize_params,
    search_margin,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BASELINE_WEIGHT_MAX",
    "BaselineGrad",
    "BaselineParams",
    "CosineMeasure",
    "DEFAULT_MARGIN_GRID",
    "DegenerateScoreWarning",
    "EPSILON_W",
    "EuclideanMeasure",
    "EvalConfig",
    "EvalResult",
    "LabeledItem",
    "LabeledItemSet",
    "LossConfig",
    "MEASURE_FAMILIES",
    "OPTIMIZER_FAMILIES",
    "OptimizerConfig",
    "OptimizerState",
    "PairExample",
    "SimilarityMeasure",
    "SplitSpec",
    "TrainConfig",
    "TrainReport",
    "TverskyGrad",
    "TverskyMeasure",
    "TverskyParams",
    "as_feature_vector",
    "baseline_grad",
    "batch_objective",
    "best_threshold",
    "contrastive_loss",
    "contrastive_loss_grad",
    "cosine_score",
    "default_loss_config",
    "default_optimizer_config",
    "euclidean_score",
    "evaluate",
    "initialize_params",
    "label_pair",
    "load_item_set",
    "make_measure",
    "result_line",
    "sample_balanced_batch",
    "sample_pair_indices",
    "search_margin",
    "split_items",
    "train",
    "tune_threshold",
    "tversky_grad",
    "tversky_score",
]
