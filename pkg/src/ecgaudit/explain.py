"""Exact Shapley attribution of model predictions to features.

With eight features there are only 256 coalitions, so attributions are
computed exactly rather than sampled: the value of a coalition is the
interventional expectation (coalition features from the explained point,
the rest from background rows), and each feature receives its exact
Shapley-weighted average marginal contribution. The additive identity
``phi0 + sum(phi) == f(x)`` then holds to machine precision, which is
what makes the audit trustworthy.

Attributions default to the probability scale of the explained class;
for logistic models the linear score ("logit") scale is also available.
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .cohort import SplitPlan
from .errors import InputError, SchemaError
from .features import FEATURE_NAMES, FeatureVector, to_matrix

MAX_FEATURES = 16
DEFAULT_BACKGROUND = 128
DEFAULT_SUBSAMPLE = 500


@dataclass(frozen=True)
class ShapExplanation:
    phi: np.ndarray  # one value per feature, model-output units
    phi0: float  # mean prediction over the background
    explained_class: str
    x: np.ndarray  # the explained feature values
    background_size: int
    scale: str


@dataclass(frozen=True)
class ShapSummary:
    feature_names: tuple
    mean_abs_phi: tuple  # aligned with feature_names
    ranking: tuple  # feature names, descending mean |phi|
    rows: tuple  # (feature, rank, feature value, phi) per explained point
    class_policy: str
    scale: str
    background_size: int
    n_explained: int


def _as_vector(model, x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        if list(model.feature_names) != list(FEATURE_NAMES):
            raise SchemaError("model feature names do not match the vector layout")
        return x.values()
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size != len(model.feature_names):
        raise SchemaError(
            f"expected {len(model.feature_names)} feature values, got {arr.size}"
        )
    return arr


def _as_background(background) -> np.ndarray:
    if len(background) == 0:
        raise InputError("background must be non-empty")
    if isinstance(background[0], FeatureVector):
        return to_matrix(list(background))
    bg = np.asarray(background, dtype=float)
    return np.atleast_2d(bg)


def _score_fn(model, class_label, scale):
    labels = list(model.class_labels)
    if class_label not in labels:
        raise SchemaError(f"class {class_label!r} unknown to the model")
    ci = labels.index(class_label)
    if scale == "probability":
        return lambda X: model.predict_proba(X)[:, ci]
    if scale == "logit":
        if not hasattr(model, "decision_scores"):
            raise InputError("logit scale is only available for logistic models")
        return lambda X: model.decision_scores(X)[:, ci]
    raise InputError(f"unknown scale {scale!r}")


def _coalition_values(score, x_vec, bg, n_features) -> np.ndarray:
    """score averaged over background rows, for every coalition bitmask."""
    n_masks = 1 << n_features
    n_bg = bg.shape[0]
    v = np.empty(n_masks)
    chunk = max(1, (1 << 20) // n_bg)  # cap working set at ~1M rows
    bit = np.arange(n_features)
    for start in range(0, n_masks, chunk):
        masks = np.arange(start, min(start + chunk, n_masks))
        take_x = ((masks[:, None] >> bit) & 1).astype(bool)  # (masks, F)
        rows = np.where(take_x[:, None, :], x_vec, bg[None, :, :])
        scores = score(rows.reshape(-1, n_features))
        v[masks] = scores.reshape(masks.size, n_bg).mean(axis=1)
    return v


def shap_exact(model, x, background, class_label=None, scale="probability") -> ShapExplanation:
    """Exact Shapley values of one prediction over all coalitions.

    ``background`` anchors the interventional expectation; out-of-
    coalition features are replaced by background rows. ``class_label``
    defaults to the model's predicted class for x.
    """
    n_features = len(model.feature_names)
    if n_features > MAX_FEATURES:
        raise InputError(
            f"{n_features} features means 2^{n_features} coalitions; "
            f"subsample to <= {MAX_FEATURES} features for exact attribution"
        )
    x_vec = _as_vector(model, x)
    bg = _as_background(background)
    if bg.shape[1] != n_features:
        raise SchemaError("background width does not match the model")
    if class_label is None:
        proba = model.predict_proba(x_vec.reshape(1, -1))[0]
        class_label = model.class_labels[int(np.argmax(proba))]

    score = _score_fn(model, class_label, scale)
    v = _coalition_values(score, x_vec, bg, n_features)

    masks = np.arange(1 << n_features)
    sizes = np.zeros(masks.size, dtype=int)
    for i in range(n_features):
        sizes += (masks >> i) & 1
    m_fact = math.factorial(n_features)
    weight_by_size = np.asarray(
        [
            math.factorial(s) * math.factorial(n_features - s - 1) / m_fact
            for s in range(n_features)
        ]
    )

    phi = np.empty(n_features)
    for i in range(n_features):
        without = masks[(masks >> i) & 1 == 0]
        gains = v[without | (1 << i)] - v[without]
        phi[i] = float(weight_by_size[sizes[without]] @ gains)

    return ShapExplanation(
        phi=phi,
        phi0=float(v[0]),
        explained_class=class_label,
        x=x_vec,
        background_size=bg.shape[0],
        scale=scale,
    )


def subsample_rows(items, size, seed):
    """Seeded subsample preserving original order; identity when small."""
    if len(items) <= size:
        return list(items)
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(len(items), size=size, replace=False))
    return [items[i] for i in keep]


def shap_summary(
    model,
    plan: SplitPlan,
    background=None,
    class_policy: str = "predicted",
    scale: str = "probability",
    subsample: int = DEFAULT_SUBSAMPLE,
    seed: int = 0,
) -> ShapSummary:
    """Aggregate per-feature attribution over the test side of a plan.

    ``class_policy`` is "predicted" (explain each point's own predicted
    class) or a fixed class label. Large test sides are reduced to a
    seeded subsample. Features are ranked by mean absolute attribution.
    """
    if not plan.test:
        raise InputError("plan has an empty test side")
    if background is None:
        background = subsample_rows(list(plan.train), DEFAULT_BACKGROUND, seed)
    bg = _as_background(background)
    points = subsample_rows(list(plan.test), subsample, seed)

    names = list(model.feature_names)
    fixed_class = None if class_policy == "predicted" else class_policy
    phis = np.empty((len(points), len(names)))
    values = to_matrix(points)
    for j, point in enumerate(points):
        explanation = shap_exact(model, point, bg, fixed_class, scale)
        phis[j] = explanation.phi

    mean_abs = np.abs(phis).mean(axis=0)
    order = np.argsort(-mean_abs, kind="stable")
    ranking = tuple(names[i] for i in order)
    rank_of = {name: r + 1 for r, name in enumerate(ranking)}

    rows = []
    for j in range(len(points)):
        for name in ranking:
            i = names.index(name)
            rows.append((name, rank_of[name], float(values[j, i]), float(phis[j, i])))

    return ShapSummary(
        feature_names=tuple(names),
        mean_abs_phi=tuple(float(m) for m in mean_abs),
        ranking=ranking,
        rows=tuple(rows),
        class_policy=class_policy,
        scale=scale,
        background_size=bg.shape[0],
        n_explained=len(points),
    )


def summary_to_dict(summary: ShapSummary) -> dict:
    return {
        "feature_names": list(summary.feature_names),
        "mean_abs_phi": {
            name: value
            for name, value in zip(summary.feature_names, summary.mean_abs_phi)
        },
        "ranking": list(summary.ranking),
        "class_policy": summary.class_policy,
        "scale": summary.scale,
        "background_size": summary.background_size,
        "n_explained": summary.n_explained,
    }


def write_summary_json(summary: ShapSummary, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary_to_dict(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_beeswarm_csv(summary: ShapSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("feature", "rank", "value", "phi"))
        for feature, rank, value, phi in summary.rows:
            writer.writerow((feature, rank, repr(value), repr(phi)))


def render_summary_svg(summary: ShapSummary, path) -> None:
    """Beeswarm-style attribution plot: one strip per feature (ranked),
    x = attribution, color = where the feature value sits in its range."""
    import matplotlib

    matplotlib.rcParams["svg.hashsalt"] = "ecgaudit"
    from matplotlib.figure import Figure

    by_feature = {name: ([], []) for name in summary.ranking}
    for feature, _, value, phi in summary.rows:
        by_feature[feature][0].append(value)
        by_feature[feature][1].append(phi)

    n = len(summary.ranking)
    fig = Figure(figsize=(7.0, 0.6 * n + 1.2))
    ax = fig.subplots()
    cmap = matplotlib.colormaps["coolwarm"]
    for row, feature in enumerate(summary.ranking):
        vals = np.asarray(by_feature[feature][0])
        phis = np.asarray(by_feature[feature][1])
        # color and vertical jitter from the value's rank within its feature
        vrank = np.argsort(np.argsort(vals, kind="stable"), kind="stable")
        frac = vrank / max(len(vals) - 1, 1)
        y = (n - row) + (frac - 0.5) * 0.55
        ax.scatter(phis, y, c=cmap(frac), s=12, linewidths=0)
    ax.axvline(0.0, color="0.6", linewidth=0.8)
    ax.set_yticks([n - r for r in range(n)], summary.ranking)
    label = "contribution to class probability"
    if summary.scale == "logit":
        label = "contribution to class score (logit)"
    ax.set_xlabel(label)
    ax.set_title("Feature attribution (color: feature value low→high)")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
