"""Hyperparameter selection by participant-grouped cross-validation.

Folds group windows by participant (no person straddles a fold), all on
the training side of a split, so tuning never peeks at test windows.
The best mean macro-F1 wins; exact ties go to the simpler config (fewer
trees, then smaller depth; larger L2 for logistic).
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from ..cohort import Task, task_label
from ..errors import DegenerateTrainingError, InputError
from ..evaluate import macro_f1
from ..features import FEATURE_NAMES, to_matrix
from .forest import ForestConfig, fit_forest
from .logistic import LogisticConfig, fit_logistic
from .tree import TreeConfig, fit_tree

NUM_FOLDS = 3


def default_grid(kind: str):
    if kind == "logistic":
        return [LogisticConfig(l2_lambda=lam) for lam in (0.0, 1e-3, 1e-1)]
    if kind == "tree":
        return [TreeConfig(max_depth=d) for d in (4, 8, 16)]
    if kind == "forest":
        return [
            ForestConfig(n_trees=t, max_depth=d)
            for t in (50, 100)
            for d in (8, 16)
        ]
    raise InputError(f"unknown model kind {kind!r}")


def default_config(kind: str):
    return {"logistic": LogisticConfig(), "tree": TreeConfig(),
            "forest": ForestConfig()}[kind]


def fit_config(config, X, y, feature_names=None):
    if isinstance(config, LogisticConfig):
        return fit_logistic(X, y, config, feature_names)
    if isinstance(config, TreeConfig):
        return fit_tree(X, y, config, feature_names)
    if isinstance(config, ForestConfig):
        return fit_forest(X, y, config, feature_names)
    raise InputError(f"unknown config type {type(config).__name__}")


def _simpler(a, b) -> bool:
    """True when config a is simpler than b (same kind only)."""
    if type(a) is not type(b):
        return False
    if isinstance(a, ForestConfig):
        return (a.n_trees, a.max_depth) < (b.n_trees, b.max_depth)
    if isinstance(a, TreeConfig):
        return a.max_depth < b.max_depth
    if isinstance(a, LogisticConfig):
        return a.l2_lambda > b.l2_lambda
    return False


@dataclass(frozen=True)
class TuneResult:
    config: object
    model: object
    cv_f1: tuple  # mean macro-F1 per grid entry, grid order


def tune(train_vectors, task: Task, grid, seed: int) -> TuneResult:
    """Pick the grid config with the best 3-fold CV macro-F1 and refit."""
    if not grid:
        raise InputError("empty tuning grid")
    if not train_vectors:
        raise InputError("empty training set")

    X = to_matrix(list(train_vectors))
    y = np.asarray([task_label(v, task) for v in train_vectors])

    participants = sorted({v.participant_id for v in train_vectors})
    rng = np.random.default_rng(seed)
    if len(participants) >= NUM_FOLDS:
        shuffled = list(participants)
        rng.shuffle(shuffled)
        fold_of_pid = {pid: i % NUM_FOLDS for i, pid in enumerate(shuffled)}
        fold = np.asarray(
            [fold_of_pid[v.participant_id] for v in train_vectors]
        )
    else:
        warnings.warn("fewer than 3 participants; falling back to record-level folds")
        fold = rng.permutation(len(train_vectors)) % NUM_FOLDS

    # per-config configs get fold-local seeds so CV fits are reproducible
    scores = []
    for gi, config in enumerate(grid):
        fold_scores = []
        for k in range(NUM_FOLDS):
            va = fold == k
            tr = ~va
            if not va.any() or not tr.any():
                continue
            if len(set(y[tr].tolist())) < 2:
                warnings.warn(f"fold {k} training side is single-class; scored 0")
                fold_scores.append(0.0)
                continue
            try:
                model = fit_config(config, X[tr], y[tr], FEATURE_NAMES)
            except DegenerateTrainingError:
                fold_scores.append(0.0)
                continue
            proba = model.predict_proba(X[va])
            pred = [model.class_labels[i] for i in np.argmax(proba, axis=1)]
            fold_scores.append(macro_f1(y[va].tolist(), pred))
        scores.append(float(np.mean(fold_scores)) if fold_scores else 0.0)

    best_i = 0
    for i in range(1, len(grid)):
        if scores[i] > scores[best_i] or (
            scores[i] == scores[best_i] and _simpler(grid[i], grid[best_i])
        ):
            best_i = i

    best_config = grid[best_i]
    if hasattr(best_config, "seed"):
        best_config = replace(best_config, seed=seed)
    model = fit_config(best_config, X, y, FEATURE_NAMES)
    return TuneResult(config=best_config, model=model, cv_f1=tuple(scores))
