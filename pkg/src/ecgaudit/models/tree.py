"""CART decision tree with Gini impurity, grown greedily.

Nodes live in parallel arrays (feature, threshold, left, right, class
counts), appended in preorder so child indices are always greater than
the parent's: the structure is acyclic by construction and trivially
serializable. Ties between candidate splits break deterministically on
lowest feature index, then lowest threshold.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 8
    min_leaf: int = 5
    seed: int = 0
    class_weight: str | None = None  # None or "balanced"


@dataclass
class TreeNodes:
    """Parallel node arrays; leaves have feature == -1."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) weighted class counts

    def route(self, Z: np.ndarray) -> np.ndarray:
        """Leaf index for every row of Z (standardized features)."""
        idx = np.zeros(Z.shape[0], dtype=int)
        while True:
            feat = self.feature[idx]
            rows = np.nonzero(feat >= 0)[0]
            if rows.size == 0:
                return idx
            node = idx[rows]
            go_left = Z[rows, feat[rows]] <= self.threshold[node]
            idx[rows] = np.where(go_left, self.left[node], self.right[node])

    def leaf_proba(self, Z: np.ndarray) -> np.ndarray:
        counts = self.counts[self.route(Z)]
        return counts / counts.sum(axis=1, keepdims=True)


def _gini(counts: np.ndarray, total: float) -> float:
    if total <= 0:
        return 0.0
    p = counts / total
    return 1.0 - float(p @ p)


def _best_split(Z, y_idx, w, rows, n_classes, min_leaf, features):
    """Best (gain, feature, threshold) over candidate features, or None."""
    n = rows.size
    parent_counts = np.bincount(y_idx[rows], weights=w[rows], minlength=n_classes)
    parent_total = float(parent_counts.sum())
    parent_imp = _gini(parent_counts, parent_total)

    best = None  # (gain, feature, threshold, left_mask)
    for f in features:
        v = Z[rows, f]
        order = np.argsort(v, kind="stable")
        sv, sy, sw = v[order], y_idx[rows][order], w[rows][order]
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), sy] = sw
        cum = np.cumsum(onehot, axis=0)  # class-weight mass left of each cut

        k = np.arange(1, n)  # cut between positions k-1 and k
        valid = (sv[1:] > sv[:-1]) & (k >= min_leaf) & (n - k >= min_leaf)
        if not valid.any():
            continue
        left_counts = cum[:-1][valid]
        left_total = left_counts.sum(axis=1)
        right_counts = parent_counts - left_counts
        right_total = parent_total - left_total
        imp_left = 1.0 - np.einsum("ij,ij->i", left_counts, left_counts) / left_total**2
        imp_right = (
            1.0 - np.einsum("ij,ij->i", right_counts, right_counts) / right_total**2
        )
        gains = parent_imp - (left_total * imp_left + right_total * imp_right) / parent_total

        j = int(np.argmax(gains))  # first max = lowest threshold on ties
        gain = float(gains[j])
        if gain <= 0:
            continue
        cut = k[valid][j]
        threshold = 0.5 * (sv[cut - 1] + sv[cut])
        if best is None or gain > best[0]:
            best = (gain, f, threshold)
    return best


def grow_tree(Z, y_idx, w, n_classes, config: TreeConfig, rng=None, mtry=None):
    """Grow node arrays on standardized features.

    ``rng``/``mtry`` enable per-node feature subsampling for forests;
    with ``mtry`` covering all features no randomness is consumed, so a
    single-tree forest without bootstrap equals a plain tree.
    """
    n_features = Z.shape[1]
    feature, threshold, left, right, counts = [], [], [], [], []

    def build(rows, depth):
        node_id = len(feature)
        node_counts = np.bincount(y_idx[rows], weights=w[rows], minlength=n_classes)
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        counts.append(node_counts)

        pure = np.count_nonzero(node_counts) <= 1
        if depth >= config.max_depth or pure or rows.size < 2 * config.min_leaf:
            return node_id
        if rng is not None and mtry is not None and mtry < n_features:
            candidates = np.sort(rng.choice(n_features, size=mtry, replace=False))
        else:
            candidates = np.arange(n_features)
        split = _best_split(Z, y_idx, w, rows, n_classes, config.min_leaf, candidates)
        if split is None:
            return node_id
        _, f, thr = split
        go_left = Z[rows, f] <= thr
        feature[node_id] = f
        threshold[node_id] = thr
        left[node_id] = build(rows[go_left], depth + 1)
        right[node_id] = build(rows[~go_left], depth + 1)
        return node_id

    build(np.arange(Z.shape[0]), 0)
    return TreeNodes(
        feature=np.asarray(feature, dtype=int),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=int),
        right=np.asarray(right, dtype=int),
        counts=np.asarray(counts, dtype=float),
    )


@dataclass
class TreeModel:
    kind: str
    feature_names: list
    class_labels: list
    mean: np.ndarray
    std: np.ndarray
    nodes: TreeNodes
    config: TreeConfig = field(default_factory=TreeConfig)

    def standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.nodes.leaf_proba(self.standardize(np.atleast_2d(X)))


def class_weights(y_idx: np.ndarray, n_classes: int, mode: str | None) -> np.ndarray:
    """Per-sample weights; "balanced" uses inverse class frequency."""
    if mode is None:
        return np.ones(y_idx.size)
    if mode != "balanced":
        raise InputError(f"unknown class_weight mode {mode!r}")
    freq = np.bincount(y_idx, minlength=n_classes).astype(float)
    per_class = np.where(freq > 0, y_idx.size / (n_classes * np.maximum(freq, 1)), 0.0)
    return per_class[y_idx]


def standardization(X: np.ndarray):
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return mean, std


def fit_tree(X, y, config: TreeConfig = TreeConfig(), feature_names=None) -> TreeModel:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError("training set is empty")
    y = np.asarray(y)
    class_labels = sorted(set(y.tolist()))
    y_idx = np.asarray([class_labels.index(label) for label in y])
    mean, std = standardization(X)
    Z = (X - mean) / std
    w = class_weights(y_idx, len(class_labels), config.class_weight)
    nodes = grow_tree(Z, y_idx, w, len(class_labels), config)
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(X.shape[1])]
    return TreeModel(
        kind="tree",
        feature_names=list(feature_names),
        class_labels=class_labels,
        mean=mean,
        std=std,
        nodes=nodes,
        config=config,
    )
