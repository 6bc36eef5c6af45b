"""Random forest: bagged CART trees with per-node feature subsampling.

Every tree gets its own seed drawn once from the forest seed, so trees
are reproducible independently of training order or parallel schedule.
The forest prediction is the arithmetic mean of the trees' leaf class
distributions.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError
from .tree import TreeConfig, class_weights, grow_tree, standardization


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 8
    min_leaf: int = 5
    mtry: int | None = None  # None -> ceil(sqrt(n_features))
    seed: int = 0
    bootstrap: bool = True
    class_weight: str | None = None


@dataclass
class ForestModel:
    kind: str
    feature_names: list
    class_labels: list
    mean: np.ndarray
    std: np.ndarray
    trees: list  # TreeNodes per tree
    tree_seeds: list
    config: ForestConfig = field(default_factory=ForestConfig)

    def standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        Z = self.standardize(np.atleast_2d(X))
        acc = np.zeros((Z.shape[0], len(self.class_labels)))
        for nodes in self.trees:
            acc += nodes.leaf_proba(Z)
        return acc / len(self.trees)


def fit_forest(X, y, config: ForestConfig = ForestConfig(), feature_names=None) -> ForestModel:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError("training set is empty")
    if config.n_trees < 1:
        raise InputError("n_trees must be >= 1")
    y = np.asarray(y)
    class_labels = sorted(set(y.tolist()))
    y_idx = np.asarray([class_labels.index(label) for label in y])
    mean, std = standardization(X)
    Z = (X - mean) / std
    w = class_weights(y_idx, len(class_labels), config.class_weight)

    n, n_features = Z.shape
    mtry = config.mtry if config.mtry is not None else math.ceil(math.sqrt(n_features))
    mtry = min(mtry, n_features)
    tree_config = TreeConfig(
        max_depth=config.max_depth,
        min_leaf=config.min_leaf,
        class_weight=config.class_weight,
    )

    root_rng = np.random.default_rng(config.seed)
    tree_seeds = [int(s) for s in root_rng.integers(0, 2**63, size=config.n_trees)]
    trees = []
    for seed in tree_seeds:
        rng = np.random.default_rng(seed)
        rows = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        trees.append(
            grow_tree(Z[rows], y_idx[rows], w[rows], len(class_labels),
                      tree_config, rng=rng, mtry=mtry)
        )

    if feature_names is None:
        feature_names = [f"f{i}" for i in range(n_features)]
    return ForestModel(
        kind="forest",
        feature_names=list(feature_names),
        class_labels=class_labels,
        mean=mean,
        std=std,
        trees=trees,
        tree_seeds=tree_seeds,
        config=config,
    )
