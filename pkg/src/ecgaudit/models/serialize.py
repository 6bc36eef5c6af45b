"""Model persistence as JSON.

Floats are emitted with repr (Python's json default), which round-trips
bit-identically, so a saved model reproduces its predictions exactly.
NaN thresholds at leaf nodes become null on disk (strict JSON).
"""

import json
from dataclasses import asdict

import numpy as np

from ..errors import SchemaError
from .forest import ForestConfig, ForestModel
from .logistic import LogisticConfig, LogisticModel
from .tree import TreeConfig, TreeModel, TreeNodes


def _nodes_to_dict(nodes: TreeNodes) -> dict:
    return {
        "feature": nodes.feature.tolist(),
        "threshold": [None if np.isnan(t) else float(t) for t in nodes.threshold],
        "left": nodes.left.tolist(),
        "right": nodes.right.tolist(),
        "counts": nodes.counts.tolist(),
    }


def _nodes_from_dict(d: dict) -> TreeNodes:
    return TreeNodes(
        feature=np.asarray(d["feature"], dtype=int),
        threshold=np.asarray(
            [np.nan if t is None else t for t in d["threshold"]], dtype=float
        ),
        left=np.asarray(d["left"], dtype=int),
        right=np.asarray(d["right"], dtype=int),
        counts=np.asarray(d["counts"], dtype=float),
    )


def model_to_dict(model) -> dict:
    base = {
        "kind": model.kind,
        "feature_names": list(model.feature_names),
        "class_labels": list(model.class_labels),
        "standardization": {
            "mean": model.mean.tolist(),
            "std": model.std.tolist(),
        },
        "config": asdict(model.config),
    }
    if isinstance(model, LogisticModel):
        base["params"] = {
            "weights": model.weights.tolist(),
            "intercepts": model.intercepts.tolist(),
            "converged": model.converged,
            "n_iter": model.n_iter,
        }
    elif isinstance(model, TreeModel):
        base["params"] = {"nodes": _nodes_to_dict(model.nodes)}
    elif isinstance(model, ForestModel):
        base["params"] = {
            "trees": [_nodes_to_dict(t) for t in model.trees],
            "tree_seeds": list(model.tree_seeds),
        }
    else:
        raise SchemaError(f"cannot serialize model of type {type(model).__name__}")
    return base


def model_from_dict(d: dict):
    kind = d.get("kind")
    common = dict(
        kind=kind,
        feature_names=list(d["feature_names"]),
        class_labels=list(d["class_labels"]),
        mean=np.asarray(d["standardization"]["mean"], dtype=float),
        std=np.asarray(d["standardization"]["std"], dtype=float),
    )
    params = d["params"]
    if kind == "logistic":
        return LogisticModel(
            **common,
            weights=np.asarray(params["weights"], dtype=float),
            intercepts=np.asarray(params["intercepts"], dtype=float),
            converged=bool(params["converged"]),
            n_iter=int(params["n_iter"]),
            config=LogisticConfig(**d["config"]),
        )
    if kind == "tree":
        return TreeModel(
            **common,
            nodes=_nodes_from_dict(params["nodes"]),
            config=TreeConfig(**d["config"]),
        )
    if kind == "forest":
        config = ForestConfig(**d["config"])
        return ForestModel(
            **common,
            trees=[_nodes_from_dict(t) for t in params["trees"]],
            tree_seeds=[int(s) for s in params["tree_seeds"]],
            config=config,
        )
    raise SchemaError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
