"""Multinomial logistic regression fit by gradient descent.

Features are standardized internally (constants stored on the model),
the weight matrix starts at zero, and each step uses backtracking line
search against the Armijo condition, so fitting is fully deterministic.
Training minimizes the mean cross-entropy plus an L2 penalty on the
weights (intercepts unpenalized).
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateTrainingError, InputError
from .tree import class_weights, standardization


@dataclass(frozen=True)
class LogisticConfig:
    l2_lambda: float = 0.0
    max_iter: int = 500
    tol: float = 1e-6
    seed: int = 0
    class_weight: str | None = None


@dataclass
class LogisticModel:
    kind: str
    feature_names: list
    class_labels: list
    mean: np.ndarray
    std: np.ndarray
    weights: np.ndarray  # (n_classes, n_features)
    intercepts: np.ndarray  # (n_classes,)
    converged: bool
    n_iter: int
    config: LogisticConfig = field(default_factory=LogisticConfig)

    def standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        """Pre-softmax linear scores (the logit scale)."""
        return self.standardize(np.atleast_2d(X)) @ self.weights.T + self.intercepts

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.decision_scores(X))


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(W, b, Z, Y, sample_w, l2_lambda):
    """Weighted mean cross-entropy with L2 on W; returns (loss, gW, gb)."""
    total_w = sample_w.sum()
    P = softmax(Z @ W.T + b)
    logp = np.log(np.maximum(P[Y.astype(bool)], 1e-300))
    loss = -(sample_w @ logp) / total_w + 0.5 * l2_lambda * float(np.sum(W * W))
    R = (P - Y) * sample_w[:, None]
    gW = R.T @ Z / total_w + l2_lambda * W
    gb = R.sum(axis=0) / total_w
    return loss, gW, gb


def fit_logistic(X, y, config: LogisticConfig = LogisticConfig(), feature_names=None) -> LogisticModel:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError("training set is empty")
    y = np.asarray(y)
    class_labels = sorted(set(y.tolist()))
    if len(class_labels) < 2:
        raise DegenerateTrainingError(
            f"logistic regression needs >= 2 classes, got {class_labels}"
        )
    y_idx = np.asarray([class_labels.index(label) for label in y])
    mean, std = standardization(X)
    Z = (X - mean) / std

    n, n_features = Z.shape
    n_classes = len(class_labels)
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y_idx] = 1.0
    sample_w = class_weights(y_idx, n_classes, config.class_weight)

    W = np.zeros((n_classes, n_features))
    b = np.zeros(n_classes)
    step = 1.0
    converged = False
    loss, gW, gb = loss_and_grad(W, b, Z, Y, sample_w, config.l2_lambda)
    n_iter = 0
    for n_iter in range(1, config.max_iter + 1):
        grad_norm = max(np.max(np.abs(gW)), np.max(np.abs(gb)))
        if grad_norm < config.tol:
            converged = True
            break
        g_sq = float(np.sum(gW * gW) + np.sum(gb * gb))
        step = min(step * 2.0, 1e3)  # warm-start from the previous step size
        for _ in range(60):
            W_new = W - step * gW
            b_new = b - step * gb
            new_loss, gW_new, gb_new = loss_and_grad(
                W_new, b_new, Z, Y, sample_w, config.l2_lambda
            )
            if new_loss <= loss - 1e-4 * step * g_sq:
                break
            step *= 0.5
        else:
            break  # line search exhausted; gradient is numerically flat
        W, b, loss, gW, gb = W_new, b_new, new_loss, gW_new, gb_new

    if feature_names is None:
        feature_names = [f"f{i}" for i in range(n_features)]
    return LogisticModel(
        kind="logistic",
        feature_names=list(feature_names),
        class_labels=class_labels,
        mean=mean,
        std=std,
        weights=W,
        intercepts=b,
        converged=converged,
        n_iter=n_iter,
        config=config,
    )
