"""Statistical PQRST features over analysis windows.

Eight numbers summarize each window: the mean amplitude difference
between P, Q, S, T and the R peak (averaged over beats where both peaks
of the pair exist), and the mean interval between the four adjacent
fiducial pairs P-Q, Q-R, R-S, S-T. Beats with missing fiducials simply
drop out of the affected means; a window is discarded (and counted) when
it has too few complete beats to be meaningful.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .delineate import PEAK_KINDS, BeatAnnotation
from .errors import InputError, UndefinedFeatureError

AMP_FEATURES = ("amp_PR", "amp_QR", "amp_SR", "amp_TR")
INT_FEATURES = ("int_PQ", "int_QR", "int_RS", "int_ST")
FEATURE_NAMES = AMP_FEATURES + INT_FEATURES

CSV_HEADER = (
    "participant_id",
    "window_index",
    "gender",
    "age_group",
) + FEATURE_NAMES


@dataclass(frozen=True)
class WindowLabels:
    """Task labels attached to every window of a record."""

    participant_id: str
    gender: str
    age_group: str


@dataclass(frozen=True)
class FeatureVector:
    participant_id: str
    window_index: int
    gender: str
    age_group: str
    amp_PR: float
    amp_QR: float
    amp_SR: float
    amp_TR: float
    int_PQ: float
    int_QR: float
    int_RS: float
    int_ST: float

    def values(self) -> np.ndarray:
        """The 8 features in canonical order."""
        return np.asarray([getattr(self, name) for name in FEATURE_NAMES])


@dataclass
class DropStats:
    """Why windows were discarded during extraction."""

    windows_total: int = 0
    kept: int = 0
    dropped_few_beats: int = 0
    dropped_undefined: int = 0

    def merge(self, other: "DropStats"):
        self.windows_total += other.windows_total
        self.kept += other.kept
        self.dropped_few_beats += other.dropped_few_beats
        self.dropped_undefined += other.dropped_undefined

    def as_dict(self) -> dict:
        return {
            "windows_total": self.windows_total,
            "kept": self.kept,
            "dropped_few_beats": self.dropped_few_beats,
            "dropped_undefined": self.dropped_undefined,
        }


def mean_amplitude_difference(beats: list[BeatAnnotation], x: str) -> float:
    """Mean of (A_X - A_R) over beats where both peaks exist."""
    if x not in PEAK_KINDS:
        raise InputError(f"unknown peak kind {x!r}")
    diffs = [
        beat.amplitude(x) - beat.amp_r
        for beat in beats
        if beat.amplitude(x) is not None
    ]
    if not diffs:
        raise UndefinedFeatureError(f"no valid {x}-R pairs in window")
    return float(np.mean(diffs))


def mean_interval(beats: list[BeatAnnotation], x: str, y: str) -> float:
    """Mean of (t_Y - t_X) over beats where both fiducials exist.

    ``x`` must not come after ``y`` in PQRST order, so results are
    non-negative; ``x == y`` is the degenerate zero-length interval.
    """
    if x not in PEAK_KINDS or y not in PEAK_KINDS:
        raise InputError(f"unknown peak pair ({x!r}, {y!r})")
    if PEAK_KINDS.index(x) > PEAK_KINDS.index(y):
        raise InputError(f"{x} does not precede {y} in PQRST order")
    if x == y:
        return 0.0
    gaps = [
        beat.time(y) - beat.time(x)
        for beat in beats
        if beat.time(x) is not None and beat.time(y) is not None
    ]
    if not gaps:
        raise UndefinedFeatureError(f"no valid {x}-{y} pairs in window")
    return float(np.mean(gaps))


def all_pair_intervals(beats: list[BeatAnnotation]) -> dict:
    """Mean intervals for all 10 ordered PQRST pairs (the extended set).

    The canonical feature vector sticks to the four adjacent pairs; this
    helper exposes the rest for exploratory use.
    """
    out = {}
    for i, x in enumerate(PEAK_KINDS):
        for y in PEAK_KINDS[i + 1 :]:
            try:
                out[f"int_{x}{y}"] = mean_interval(beats, x, y)
            except UndefinedFeatureError:
                out[f"int_{x}{y}"] = None
    return out


def _is_complete(beat: BeatAnnotation) -> bool:
    return all(beat.index(kind) is not None for kind in PEAK_KINDS)


def window_features(beats: list[BeatAnnotation], labels: WindowLabels,
                    window_index: int) -> FeatureVector:
    """Feature vector of one window; raises when any feature is undefined."""
    amps = {f"amp_{x}R": mean_amplitude_difference(beats, x) for x in "PQST"}
    ints = {
        f"int_{x}{y}": mean_interval(beats, x, y)
        for x, y in (("P", "Q"), ("Q", "R"), ("R", "S"), ("S", "T"))
    }
    values = {**amps, **ints}
    if not all(np.isfinite(v) for v in values.values()):
        raise UndefinedFeatureError("non-finite feature value")
    return FeatureVector(
        participant_id=labels.participant_id,
        window_index=window_index,
        gender=labels.gender,
        age_group=labels.age_group,
        **values,
    )


def windowed_features(
    beats: list[BeatAnnotation],
    fs: float,
    n_samples: int,
    labels: WindowLabels,
    window_s: float = 10.0,
    min_beats: int = 3,
):
    """Tile the record with non-overlapping windows and featurize each.

    A beat belongs to the window containing its R peak. Windows with
    fewer than ``min_beats`` complete beats (all five fiducials present)
    are dropped; so are windows where any feature ends up undefined.
    Returns ``(vectors, drop_stats)``.
    """
    if window_s <= 0:
        raise InputError("window_s must be positive")
    span = window_s * fs
    n_windows = int(n_samples // span)
    stats = DropStats(windows_total=n_windows)

    vectors = []
    for k in range(n_windows):
        lo, hi = k * span, (k + 1) * span
        in_window = [b for b in beats if lo <= b.r_index < hi]
        if sum(_is_complete(b) for b in in_window) < min_beats:
            stats.dropped_few_beats += 1
            continue
        try:
            vectors.append(window_features(in_window, labels, k))
        except UndefinedFeatureError:
            stats.dropped_undefined += 1
            continue
        stats.kept += 1
    return vectors, stats


def to_matrix(vectors: list[FeatureVector]) -> np.ndarray:
    """Stack feature vectors into an (n, 8) matrix in canonical order."""
    return np.asarray([v.values() for v in vectors], dtype=float).reshape(
        len(vectors), len(FEATURE_NAMES)
    )


def write_features_csv(vectors: list[FeatureVector], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for v in vectors:
            writer.writerow(
                [v.participant_id, v.window_index, v.gender, v.age_group]
                + [repr(float(getattr(v, name))) for name in FEATURE_NAMES]
            )


def read_features_csv(path) -> list[FeatureVector]:
    vectors = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(CSV_HEADER):
            raise InputError(f"unexpected feature table header in {path}")
        for row in reader:
            vectors.append(
                FeatureVector(
                    participant_id=row["participant_id"],
                    window_index=int(row["window_index"]),
                    gender=row["gender"],
                    age_group=row["age_group"],
                    **{name: float(row[name]) for name in FEATURE_NAMES},
                )
            )
    return vectors
