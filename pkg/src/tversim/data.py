"""Binary attribute datasets: CSV ingestion, splits, and pair sampling.

Items carry an opaque id, a class label, and a fixed-length vector of 0/1
attribute indicators. Similar/dissimilar pair labels are derived from class
labels: a pair is similar exactly when both items share a class. Sampling is
class-indexed so that uniform draws over similar and dissimilar pairs never
materialize the quadratic pair set.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "LabeledItem",
    "LabeledItemSet",
    "PairExample",
    "SplitSpec",
    "as_feature_vector",
    "label_pair",
    "load_item_set",
    "sample_balanced_batch",
    "sample_pair_indices",
    "split_items",
]

MAX_SEED = 2**64


def check_seed(seed) -> int:
    if not isinstance(seed, (int, np.integer)) or not 0 <= seed < MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def as_feature_vector(values, m: int | None = None) -> np.ndarray:
    """Coerce to a read-only float64 vector of 0/1 indicators."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"feature vector must be 1-D, got shape {arr.shape}")
    if m is not None and arr.shape[0] != m:
        raise ValueError(f"feature vector has length {arr.shape[0]}, expected {m}")
    bad = (arr != 0.0) & (arr != 1.0)
    if bad.any():
        idx = int(np.argmax(bad))
        raise ValueError(f"feature value at index {idx} is not 0 or 1: {arr[idx]!r}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LabeledItem:
    """One item: opaque id, class label, and its binary attribute vector."""

    id: str
    class_label: str
    features: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", as_feature_vector(self.features))


@dataclass(frozen=True, eq=False)
class LabeledItemSet:
    """Immutable collection of labeled items sharing one attribute schema."""

    items: tuple[LabeledItem, ...]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "feature_names", tuple(str(n) for n in self.feature_names))
        m = len(self.feature_names)
        seen = set()
        for item in self.items:
            if item.features.shape[0] != m:
                raise ValueError(
                    f"item '{item.id}' has {item.features.shape[0]} features, expected {m}"
                )
            if item.id in seen:
                raise ValueError(f"duplicate item id '{item.id}'")
            seen.add(item.id)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def num_features(self) -> int:
        return len(self.feature_names)

    @cached_property
    def feature_matrix(self) -> np.ndarray:
        """Read-only (n, m) float64 matrix of item features, in item order."""
        if self.items:
            matrix = np.stack([item.features for item in self.items])
        else:
            matrix = np.zeros((0, self.num_features))
        matrix.setflags(write=False)
        return matrix

    @cached_property
    def class_labels(self) -> tuple[str, ...]:
        return tuple(item.class_label for item in self.items)

    @cached_property
    def _pairs(self) -> "_PairIndex":
        return _PairIndex(self)


@dataclass(frozen=True, eq=False)
class PairExample:
    """One training triplet: two feature vectors and a binary similarity label."""

    x: np.ndarray
    y: np.ndarray
    s: int

    def __post_init__(self):
        object.__setattr__(self, "x", as_feature_vector(self.x))
        object.__setattr__(self, "y", as_feature_vector(self.y, m=self.x.shape[0]))
        if self.s not in (0, 1):
            raise ValueError(f"pair label must be 0 or 1, got {self.s!r}")
        object.__setattr__(self, "s", int(self.s))


@dataclass(frozen=True)
class SplitSpec:
    """Train/validation/test fractions plus the shuffle seed."""

    train_fraction: float
    val_fraction: float
    test_fraction: float
    seed: int

    def __post_init__(self):
        fractions = (self.train_fraction, self.val_fraction, self.test_fraction)
        for f in fractions:
            if not (math.isfinite(f) and f >= 0.0):
                raise ValueError(f"split fraction must be finite and >= 0, got {f!r}")
        total = math.fsum(fractions)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {total!r}")
        check_seed(self.seed)


def load_item_set(path, format: str = "csv") -> LabeledItemSet:
    """Load items from a CSV file.

    Contract: UTF-8, header row ``id,label,<feature names>``, then one row per
    item with a string id, a string class label, and feature cells that are
    exactly ``0`` or ``1``. Violations raise ValueError naming the row (1-based
    file line, header = row 1) and, for bad cells, the feature column.
    """
    if format != "csv":
        raise ValueError(f"unsupported format '{format}'")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        if len(header) < 3 or header[0] != "id" or header[1] != "label":
            raise ValueError(
                f"{path}: malformed header, expected 'id,label,<feature names>' "
                f"with at least one feature column, got {header!r}"
            )
        feature_names = tuple(header[2:])
        m = len(feature_names)
        items = []
        seen = set()
        for row_no, row in enumerate(reader, start=2):
            if len(row) != m + 2:
                raise ValueError(
                    f"{path}: row {row_no} has {len(row)} cells, expected {m + 2}"
                )
            item_id, label = row[0], row[1]
            if item_id in seen:
                raise ValueError(f"{path}: row {row_no}: duplicate id '{item_id}'")
            seen.add(item_id)
            raw = row[2:]
            for col, cell in enumerate(raw):
                if cell not in ("0", "1"):
                    raise ValueError(
                        f"{path}: row {row_no}, column '{feature_names[col]}': "
                        f"feature cell must be exactly 0 or 1, got '{cell}'"
                    )
            values = np.fromiter((cell == "1" for cell in raw), dtype=np.float64, count=m)
            items.append(LabeledItem(item_id, label, values))
    return LabeledItemSet(tuple(items), feature_names)


def _largest_remainder_sizes(n: int, fractions) -> tuple[int, ...]:
    exact = [f * n for f in fractions]
    sizes = [math.floor(e) for e in exact]
    leftover = n - sum(sizes)
    # ties broken toward the earlier partition
    order = sorted(range(len(fractions)), key=lambda k: (-(exact[k] - sizes[k]), k))
    for k in order[:leftover]:
        sizes[k] += 1
    return tuple(sizes)


def split_items(
    items: LabeledItemSet, spec: SplitSpec
) -> tuple[LabeledItemSet, LabeledItemSet, LabeledItemSet]:
    """Partition into disjoint train/val/test sets by a seeded uniform shuffle.

    Sizes follow largest-remainder rounding of the requested fractions, so they
    always sum to the item count. Deterministic for a fixed seed.
    """
    n = len(items)
    if n < 3:
        raise ValueError(f"need at least 3 items to split, got {n}")
    fractions = (spec.train_fraction, spec.val_fraction, spec.test_fraction)
    sizes = _largest_remainder_sizes(n, fractions)
    for name, fraction, size in zip(("train", "validation", "test"), fractions, sizes):
        if fraction > 0.0 and size == 0:
            raise ValueError(
                f"{name} partition would be empty at fraction {fraction:g} of {n} items; "
                f"use a larger dataset"
            )
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    bounds = np.cumsum(sizes)[:-1]
    parts = np.split(perm, bounds)
    return tuple(
        LabeledItemSet(tuple(items.items[int(i)] for i in part), items.feature_names)
        for part in parts
    )


def label_pair(a: LabeledItem, b: LabeledItem) -> int:
    """1 when the two items share a class label, else 0."""
    return 1 if a.class_label == b.class_label else 0


class _PairIndex:
    """Class-indexed tables for uniform similar/dissimilar pair draws.

    Similar pairs: pick a class with probability proportional to its count of
    unordered within-class pairs, then two distinct members uniformly.
    Dissimilar pairs: pick an ordered pair of distinct classes with probability
    proportional to the cross-pair count, then one member from each. Both draws
    are uniform over the respective unordered pair sets.
    """

    def __init__(self, item_set: LabeledItemSet):
        labels = np.array(item_set.class_labels, dtype=object)
        n = len(labels)
        if n:
            _, class_of = np.unique(labels, return_inverse=True)
            counts = np.bincount(class_of)
            self.order = np.argsort(class_of, kind="stable")
        else:
            class_of = np.zeros(0, dtype=np.int64)
            counts = np.zeros(0, dtype=np.int64)
            self.order = np.zeros(0, dtype=np.int64)
        self.counts = counts.astype(np.int64)
        self.starts = np.concatenate([[0], np.cumsum(self.counts)[:-1]]).astype(np.int64)
        self.n = n
        sim_weights = self.counts * (self.counts - 1) / 2.0
        self.sim_cum = np.cumsum(sim_weights)
        self.sim_total = float(self.sim_cum[-1]) if len(self.sim_cum) else 0.0
        diss_weights = self.counts * (n - self.counts).astype(np.float64)
        self.diss_cum = np.cumsum(diss_weights)
        self.diss_total = float(self.diss_cum[-1]) if len(self.diss_cum) else 0.0


def sample_pair_indices(
    items: LabeledItemSet,
    n_pairs: int,
    rng: np.random.Generator,
    positive_fraction: float = 0.5,
):
    """Vectorized pair sampling; returns index arrays ``(i, j, s)``.

    Each slot independently draws ``s = 1`` with ``positive_fraction``, then a
    uniform pair with that label (with replacement across slots, self-pairs
    excluded). Deterministic given the generator state.
    """
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    if not 0.0 < positive_fraction < 1.0:
        raise ValueError(f"positive_fraction must be in (0, 1), got {positive_fraction}")
    index = items._pairs
    if index.sim_total == 0.0:
        raise ValueError("no similar pairs: every class has a single item")
    if index.diss_total == 0.0:
        raise ValueError("no dissimilar pairs: all items share one class")

    s = rng.random(n_pairs) < positive_fraction
    i = np.empty(n_pairs, dtype=np.int64)
    j = np.empty(n_pairs, dtype=np.int64)

    k_sim = int(np.count_nonzero(s))
    if k_sim:
        u = rng.random(k_sim) * index.sim_total
        cls = np.searchsorted(index.sim_cum, u, side="right")
        size = index.counts[cls]
        start = index.starts[cls]
        m1 = rng.integers(0, size)
        m2 = rng.integers(0, size - 1)
        m2 = m2 + (m2 >= m1)
        i[s] = index.order[start + m1]
        j[s] = index.order[start + m2]

    k_diss = n_pairs - k_sim
    if k_diss:
        u = rng.random(k_diss) * index.diss_total
        cls = np.searchsorted(index.diss_cum, u, side="right")
        size = index.counts[cls]
        start = index.starts[cls]
        m1 = rng.integers(0, size)
        i[~s] = index.order[start + m1]
        q = rng.integers(0, index.n - size)
        pos = np.where(q < start, q, q + size)
        j[~s] = index.order[pos]

    return i, j, s.astype(np.int8)


def sample_balanced_batch(
    items: LabeledItemSet, batch_size: int, rng: np.random.Generator
) -> list[PairExample]:
    """One mini-batch of pair examples, half similar and half dissimilar in
    expectation (each slot draws its label with probability 0.5)."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    i, j, s = sample_pair_indices(items, batch_size, rng, positive_fraction=0.5)
    matrix = items.feature_matrix
    return [PairExample(matrix[a], matrix[b], int(lbl)) for a, b, lbl in zip(i, j, s)]
