"""Shared builders: small labeled sets, planted-cluster data, FD helpers."""

import numpy as np
import pytest

from tversim.data import LabeledItem, LabeledItemSet


def build_item_set(class_sizes: dict, m: int, seed: int = 0, feature_noise: float = 0.0):
    """Items with identity-coded features: item k gets a unique one-hot block
    so tests can recover the source item from a sampled vector."""
    rng = np.random.default_rng(seed)
    items = []
    k = 0
    for label, count in class_sizes.items():
        for _ in range(count):
            features = np.zeros(m)
            features[k % m] = 1.0
            if feature_noise:
                features = np.maximum(features, (rng.random(m) < feature_noise).astype(float))
            items.append(LabeledItem(f"{label}{k}", label, features))
            k += 1
    names = tuple(f"f{i}" for i in range(m))
    return LabeledItemSet(tuple(items), names)


def two_cluster_items(per_class: int = 20, seed: int = 3):
    """Two well-separated feature clusters; same-class pairs overlap heavily."""
    rng = np.random.default_rng(seed)
    m = 8
    items = []
    for label, block in (("a", slice(0, 3)), ("b", slice(4, 7))):
        for k in range(per_class):
            features = np.zeros(m)
            features[block] = rng.random(3) < 0.9
            features[7] = rng.random() < 0.2
            if not features[block].any():
                features[block.start] = 1.0
            items.append(LabeledItem(f"{label}{k}", label, features))
    names = tuple(f"f{i}" for i in range(m))
    return LabeledItemSet(tuple(items), names)


def planted_item_set(
    n_items: int = 500,
    n_classes: int = 10,
    m: int = 40,
    seed: int = 613,
    same_min: float = 0.6,
    cross_max: float = 0.4,
):
    """Planted clusters separable by a hidden weighted ratio measure.

    Each class owns a 3-feature core block; items are noisy copies of the
    class signature plus shared noise features. Rejection sampling enforces
    that, under the hidden (alpha*, w*) measure, every same-class pair scores
    above ``same_min`` and every cross-class pair below ``cross_max``. The
    generator itself is the oracle: class equality defines the pair labels a
    learned measure must reproduce.

    Returns (item_set, hidden) where hidden carries alpha*, w*, and the bounds.
    """
    rng = np.random.default_rng(seed)
    cores_per_class = 3
    n_core = cores_per_class * n_classes
    assert n_core < m
    alpha_star = 0.55
    w_star = np.empty(m)
    w_star[:n_core] = rng.uniform(0.7, 1.0, n_core)
    w_star[n_core:] = rng.uniform(0.05, 0.2, m - n_core)

    def hidden_sim(v, block):
        common = block * v
        c = common @ w_star
        a = (v - common) @ w_star
        b = (block - common) @ w_star
        den = c + alpha_star * (a + b)
        return np.where(den == 0.0, 1.0, c / np.where(den == 0.0, 1.0, den))

    features = np.zeros((n_items, m))
    classes = np.empty(n_items, dtype=np.int64)
    attempts = 0
    for idx in range(n_items):
        c = idx % n_classes
        core = slice(cores_per_class * c, cores_per_class * (c + 1))
        while True:
            attempts += 1
            if attempts > 200 * n_items:
                raise RuntimeError("planted generator failed to satisfy the margins")
            candidate = np.zeros(m)
            candidate[:n_core] = rng.random(n_core) < 0.01
            candidate[core] = rng.random(cores_per_class) < 0.95
            candidate[n_core:] = rng.random(m - n_core) < 0.2
            if not candidate[core].any():
                continue
            if idx:
                sims = hidden_sim(candidate, features[:idx])
                same = classes[:idx] == c
                if same.any() and sims[same].min() <= same_min:
                    continue
                if (~same).any() and sims[~same].max() >= cross_max:
                    continue
            features[idx] = candidate
            classes[idx] = c
            break

    # generator self-check: the planted margins hold for every pair
    for idx in range(n_items):
        sims = hidden_sim(features[idx], features)
        same = classes == classes[idx]
        same[idx] = False
        assert not same.any() or sims[same].min() > same_min
        assert not (~same).any() or sims[~same][classes[~same] != classes[idx]].max() < cross_max

    items = tuple(
        LabeledItem(f"item{k:04d}", f"class{classes[k]:02d}", features[k])
        for k in range(n_items)
    )
    names = tuple(f"f{k:02d}" for k in range(m))
    hidden = {
        "alpha": alpha_star,
        "weights": w_star,
        "same_min": same_min,
        "cross_max": cross_max,
    }
    return LabeledItemSet(items, names), hidden


def central_difference(f, x0: float, h: float = 1e-6) -> float:
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h)


@pytest.fixture(scope="session")
def planted():
    return planted_item_set()


@pytest.fixture
def small_items():
    return build_item_set({"horse": 3, "cat": 3}, m=8)
