"""Classification metrics, confusion matrices, and reference annotation.

Macro averages run over the classes actually present in the test set;
absent classes are excluded with a warning. ROC AUC is the area under
the exact step ROC of the predicted probabilities (ties grouped, which
equals tie-averaged pair counting); multiclass AUC is the unweighted
one-vs-rest macro average.
"""

import csv
import json
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .cohort import SplitPlan, Task
from .errors import InputError, SchemaError
from .features import to_matrix

# Published reference triplets (accuracy, precision, F1) per task, from the
# 223-participant multi-source study this toolkit mirrors. Informational
# only: desk-scale runs are not expected to reproduce them.
REFERENCE_METRICS = {
    Task.GENDER.value: {"accuracy": 0.755, "precision": 0.766, "f1": 0.760},
    Task.AGE_GROUP.value: {"accuracy": 0.671, "precision": 0.623, "f1": 0.633},
    Task.PARTICIPANT_ID.value: {"accuracy": 0.819, "precision": 0.817, "f1": 0.810},
}


def confusion_matrix(y_true, y_pred, labels) -> np.ndarray:
    """Counts with true classes as rows, predicted classes as columns."""
    index = {label: i for i, label in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=int)
    for t, p in zip(y_true, y_pred, strict=True):
        cm[index[t], index[p]] += 1
    return cm


def per_class_metrics(cm: np.ndarray):
    """Per-class (precision, recall, f1, support); zero where undefined."""
    tp = np.diag(cm).astype(float)
    support = cm.sum(axis=1).astype(float)
    predicted = cm.sum(axis=0).astype(float)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return precision, recall, f1, support


def roc_auc_binary(y_true, scores) -> float:
    """Area under the step ROC; tied scores share one threshold step."""
    y = np.asarray(y_true, dtype=bool)
    s = np.asarray(scores, dtype=float)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise InputError("ROC AUC needs both positive and negative examples")
    order = np.argsort(-s, kind="stable")
    y_sorted = y[order]
    s_sorted = s[order]
    # one ROC vertex per distinct score value
    distinct = np.nonzero(np.diff(s_sorted))[0]
    ends = np.r_[distinct, s_sorted.size - 1]
    ctp = np.cumsum(y_sorted)[ends]
    cfp = np.cumsum(~y_sorted)[ends]
    tpr = np.r_[0.0, ctp / n_pos]
    fpr = np.r_[0.0, cfp / n_neg]
    return float(np.trapz(tpr, fpr))


def roc_auc_ovr_macro(y_true, proba: np.ndarray, labels) -> float:
    """One-vs-rest macro AUC over classes with both sides represented."""
    aucs = []
    y = np.asarray(y_true)
    for i, label in enumerate(labels):
        pos = y == label
        if pos.all() or not pos.any():
            warnings.warn(f"class {label!r} lacks positives or negatives; skipped in AUC")
            continue
        aucs.append(roc_auc_binary(pos, proba[:, i]))
    if not aucs:
        raise InputError("no class had both positives and negatives")
    return float(np.mean(aucs))


def macro_f1(y_true, y_pred, labels=None) -> float:
    """Macro F1 over classes present in y_true (used by model tuning)."""
    if labels is None:
        labels = sorted(set(y_true) | set(y_pred))
    cm = confusion_matrix(y_true, y_pred, labels)
    _, _, f1, support = per_class_metrics(cm)
    present = support > 0
    if not present.any():
        return 0.0
    return float(f1[present].mean())


@dataclass(frozen=True)
class EvalReport:
    task: str
    model_kind: str
    accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    roc_auc: float
    confusion: tuple  # rows = true class, cols = predicted, over class_labels
    class_labels: tuple
    n_test: int
    per_class: dict
    reference: dict | None = None


def evaluate(model, plan: SplitPlan) -> EvalReport:
    """Score a trained model on the test side of a split plan."""
    if not plan.test:
        raise InputError("plan has an empty test side")
    y_true = plan.test_matrix_labels()
    unknown = sorted(set(y_true) - set(model.class_labels))
    if unknown:
        raise SchemaError(f"test classes absent from the model: {unknown}")

    X = to_matrix(list(plan.test))
    proba = model.predict_proba(X)
    labels = list(model.class_labels)
    y_pred = [labels[i] for i in np.argmax(proba, axis=1)]

    cm = confusion_matrix(y_true, y_pred, labels)
    precision, recall, f1, support = per_class_metrics(cm)
    present = support > 0
    for label, here in zip(labels, present):
        if not here:
            warnings.warn(f"class {label!r} absent from test; excluded from macros")

    if len(labels) == 2:
        auc = roc_auc_binary(np.asarray(y_true) == labels[1], proba[:, 1])
    else:
        auc = roc_auc_ovr_macro(y_true, proba, labels)

    n_test = len(y_true)
    return EvalReport(
        task=plan.task.value,
        model_kind=model.kind,
        accuracy=float(np.trace(cm)) / n_test,
        precision_macro=float(precision[present].mean()),
        recall_macro=float(recall[present].mean()),
        f1_macro=float(f1[present].mean()),
        roc_auc=auc,
        confusion=tuple(tuple(int(c) for c in row) for row in cm),
        class_labels=tuple(labels),
        n_test=n_test,
        per_class={
            label: {
                "precision": float(p),
                "recall": float(r),
                "f1": float(f),
                "support": int(s),
            }
            for label, p, r, f, s in zip(labels, precision, recall, f1, support)
        },
    )


def reference_compare(report: EvalReport) -> EvalReport:
    """Attach the published reference triplet and deltas; informational."""
    ref = REFERENCE_METRICS.get(report.task)
    if ref is None:
        raise InputError(f"no reference values for task {report.task!r}")
    annotated = dict(ref)
    annotated["delta"] = {
        "accuracy": report.accuracy - ref["accuracy"],
        "precision": report.precision_macro - ref["precision"],
        "f1": report.f1_macro - ref["f1"],
    }
    return replace(report, reference=annotated)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "task": report.task,
        "model_kind": report.model_kind,
        "accuracy": report.accuracy,
        "precision_macro": report.precision_macro,
        "recall_macro": report.recall_macro,
        "f1_macro": report.f1_macro,
        "roc_auc": report.roc_auc,
        "auc_averaging": "one-vs-rest macro" if len(report.class_labels) > 2 else "binary",
        "confusion": [list(row) for row in report.confusion],
        "class_labels": list(report.class_labels),
        "n_test": report.n_test,
        "per_class": report.per_class,
        "reference": report.reference,
    }


def write_report_json(report: EvalReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


SUMMARY_HEADER = (
    "task", "model", "accuracy", "precision_macro", "recall_macro",
    "f1_macro", "roc_auc", "n_test", "best",
)


def write_summary_csv(reports: list[EvalReport], path) -> None:
    """One flat row per (task, model); the best F1 per task is flagged."""
    best = {}
    for r in reports:
        if r.task not in best or r.f1_macro > best[r.task].f1_macro:
            best[r.task] = r
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for r in reports:
            writer.writerow([
                r.task, r.model_kind, repr(r.accuracy), repr(r.precision_macro),
                repr(r.recall_macro), repr(r.f1_macro), repr(r.roc_auc),
                r.n_test, "yes" if best[r.task] is r else "",
            ])
