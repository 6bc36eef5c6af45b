"""Re-identification tasks and their train/test split protocols.

Three tasks are supported. Gender and age-group prediction split at the
participant level (80% of participants train, 20% test, stratified by
class, no participant on both sides), because the attacker never sees
the target's own data. Participant-ID prediction splits each person's
windows temporally (first 80% train, last 20% test), because there the
attacker links new data from a known person.

Age groups are the six inclusive bins 21-30, 31-40, 41-50, 51-60,
61-70, 71-89.
"""

import json
import warnings
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EmptySplitError, InputError, SchemaError, ValidationError
from .features import FeatureVector

TEST_FRACTION = 0.2
MIN_WINDOWS_TEMPORAL = 5


class Task(str, Enum):
    GENDER = "gender"
    AGE_GROUP = "age_group"
    PARTICIPANT_ID = "participant_id"


class AgeGroup(str, Enum):
    G21_30 = "21-30"
    G31_40 = "31-40"
    G41_50 = "41-50"
    G51_60 = "51-60"
    G61_70 = "61-70"
    G71_89 = "71-89"


_AGE_BOUNDS = {
    AgeGroup.G21_30: (21, 30),
    AgeGroup.G31_40: (31, 40),
    AgeGroup.G41_50: (41, 50),
    AgeGroup.G51_60: (51, 60),
    AgeGroup.G61_70: (61, 70),
    AgeGroup.G71_89: (71, 89),
}


def assign_age_group(age: int) -> AgeGroup:
    """Map an ingested age onto its bin; bounds are inclusive."""
    for group, (lo, hi) in _AGE_BOUNDS.items():
        if lo <= age <= hi:
            return group
    raise ValidationError(f"age {age} outside 21-89")


def task_label(vector: FeatureVector, task: Task) -> str:
    if task == Task.GENDER:
        return vector.gender
    if task == Task.AGE_GROUP:
        return vector.age_group
    return vector.participant_id


@dataclass(frozen=True)
class SplitPlan:
    task: Task
    seed: int
    label_map: tuple
    train: tuple  # FeatureVector tuples; all windows of one side
    test: tuple

    def train_matrix_labels(self):
        return [task_label(v, self.task) for v in self.train]

    def test_matrix_labels(self):
        return [task_label(v, self.task) for v in self.test]


def _group_by_participant(features):
    groups = defaultdict(list)
    for v in features:
        groups[v.participant_id].append(v)
    for pid in groups:
        groups[pid].sort(key=lambda v: v.window_index)
    return dict(sorted(groups.items()))


def _participant_class(windows, task):
    labels = {task_label(v, task) for v in windows}
    if len(labels) != 1:
        raise InputError(
            f"participant {windows[0].participant_id} carries inconsistent "
            f"{task.value} labels: {sorted(labels)}"
        )
    return labels.pop()


def split_by_participant(features, task: Task, seed: int) -> SplitPlan:
    """80/20 participant-level split, stratified by class.

    Test slots per class are allocated by largest remainder so the total
    is exactly round(0.2 * participants); every class with at least two
    participants keeps one in train and, budget permitting, gets one
    into test. Single-participant classes stay in train with a warning.
    """
    if task not in (Task.GENDER, Task.AGE_GROUP):
        raise InputError(f"participant split not defined for task {task}")
    groups = _group_by_participant(features)
    if len(groups) < 5:
        raise InputError(f"need >= 5 participants, got {len(groups)}")

    by_class = defaultdict(list)
    for pid, windows in groups.items():
        by_class[_participant_class(windows, task)].append(pid)
    label_map = tuple(sorted(by_class))

    for label in label_map:
        if len(by_class[label]) == 1:
            warnings.warn(
                f"class {label!r} has a single participant; confined to train"
            )

    n_total = len(groups)
    n_test = max(int(round(TEST_FRACTION * n_total)), 1)
    eligible = [c for c in label_map if len(by_class[c]) >= 2]
    n_eligible = sum(len(by_class[c]) for c in eligible)

    # largest-remainder allocation of the test budget across classes
    quotas = {c: n_test * len(by_class[c]) / n_eligible for c in eligible}
    alloc = {c: int(quotas[c]) for c in eligible}
    leftover = n_test - sum(alloc.values())
    for c in sorted(eligible, key=lambda c: (-(quotas[c] - alloc[c]), c)):
        if leftover <= 0:
            break
        alloc[c] += 1
        leftover -= 1
    # keep at least one participant of each class in train
    for c in eligible:
        alloc[c] = min(alloc[c], len(by_class[c]) - 1)
    # budget permitting, give every eligible class one test participant
    short = [c for c in eligible if alloc[c] == 0]
    donors = sorted(eligible, key=lambda c: -alloc[c])
    for c in short:
        donor = next((d for d in donors if alloc[d] > 1), None)
        if donor is None:
            warnings.warn(f"test budget too small to cover class {c!r}")
            continue
        alloc[donor] -= 1
        alloc[c] += 1

    rng = np.random.default_rng(seed)
    test_pids = set()
    for c in eligible:
        pids = sorted(by_class[c])
        rng.shuffle(pids)
        test_pids.update(pids[: alloc[c]])

    train, test = [], []
    for pid, windows in groups.items():
        (test if pid in test_pids else train).extend(windows)
    return SplitPlan(
        task=task, seed=seed, label_map=label_map,
        train=tuple(train), test=tuple(test),
    )


def split_temporal(features, seed: int) -> SplitPlan:
    """Per-participant temporal prefix/suffix split for the ID task."""
    groups = _group_by_participant(features)
    train, test, label_map = [], [], []
    for pid, windows in groups.items():
        if len(windows) < MIN_WINDOWS_TEMPORAL:
            warnings.warn(
                f"participant {pid} has {len(windows)} windows "
                f"(< {MIN_WINDOWS_TEMPORAL}); excluded from the ID task"
            )
            continue
        cut = int(0.8 * len(windows))
        train.extend(windows[:cut])
        test.extend(windows[cut:])
        label_map.append(pid)
    if not label_map:
        raise EmptySplitError("no participant has enough windows for the ID task")
    return SplitPlan(
        task=Task.PARTICIPANT_ID, seed=seed, label_map=tuple(label_map),
        train=tuple(train), test=tuple(test),
    )


def make_split(features, task: Task, seed: int) -> SplitPlan:
    if task == Task.PARTICIPANT_ID:
        return split_temporal(features, seed)
    return split_by_participant(features, task, seed)


def _refs(vectors):
    return [[v.participant_id, v.window_index] for v in vectors]


def write_plan_json(plan: SplitPlan, path) -> None:
    payload = {
        "task": plan.task.value,
        "seed": plan.seed,
        "label_map": list(plan.label_map),
        "train": _refs(plan.train),
        "test": _refs(plan.test),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_plan_json(path, features) -> SplitPlan:
    """Resolve a stored plan against a feature table."""
    with open(path) as fh:
        payload = json.load(fh)
    index = {(v.participant_id, v.window_index): v for v in features}

    def resolve(refs):
        out = []
        for pid, widx in refs:
            key = (pid, widx)
            if key not in index:
                raise SchemaError(f"plan references unknown window {key}")
            out.append(index[key])
        return tuple(out)

    return SplitPlan(
        task=Task(payload["task"]),
        seed=int(payload["seed"]),
        label_map=tuple(payload["label_map"]),
        train=resolve(payload["train"]),
        test=resolve(payload["test"]),
    )
