"""Transparent classifiers: logistic regression, CART tree, random forest.

All three are implemented in-repo so weights, decision paths and trees
are first-class, exportable data rather than opaque library state.
"""

import numpy as np

from ..errors import SchemaError
from ..features import FeatureVector
from .forest import ForestConfig, ForestModel, fit_forest
from .logistic import LogisticConfig, LogisticModel, fit_logistic, loss_and_grad
from .serialize import load_model, model_from_dict, model_to_dict, save_model
from .tree import TreeConfig, TreeModel, TreeNodes, fit_tree
from .tune import TuneResult, default_config, default_grid, fit_config, tune

MODEL_KINDS = ("logistic", "tree", "forest")

__all__ = [
    "MODEL_KINDS",
    "ForestConfig", "ForestModel", "fit_forest",
    "LogisticConfig", "LogisticModel", "fit_logistic", "loss_and_grad",
    "TreeConfig", "TreeModel", "TreeNodes", "fit_tree",
    "TuneResult", "default_config", "default_grid", "fit_config", "tune",
    "load_model", "model_from_dict", "model_to_dict", "save_model",
    "predict_proba", "predict",
]


def _as_matrix(model, x):
    if isinstance(x, FeatureVector):
        from ..features import FEATURE_NAMES

        if list(model.feature_names) != list(FEATURE_NAMES):
            raise SchemaError(
                f"model features {model.feature_names} do not match the "
                f"canonical vector layout"
            )
        return x.values().reshape(1, -1), True
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != len(model.feature_names):
        raise SchemaError(
            f"model expects {len(model.feature_names)} features, got {arr.shape[1]}"
        )
    return arr, single


def predict_proba(model, x) -> np.ndarray:
    """Probability vector(s) over model.class_labels for x.

    Accepts a FeatureVector, a 1-D feature array, or an (n, F) matrix;
    single inputs return a 1-D probability vector.
    """
    X, single = _as_matrix(model, x)
    proba = model.predict_proba(X)
    return proba[0] if single else proba


def predict(model, x):
    """Most probable class label(s); argmax of predict_proba."""
    proba = predict_proba(model, x)
    if proba.ndim == 1:
        return model.class_labels[int(np.argmax(proba))]
    return [model.class_labels[int(i)] for i in np.argmax(proba, axis=1)]
