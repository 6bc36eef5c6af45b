"""Reading and writing ECG recordings.

A recording lives in two files: a signal CSV and a JSON metadata sidecar.

Signal CSV
    Either a single ``mv`` column or two columns ``t,mv``; the header row
    is optional. Multi-column files (multi-lead exports) require the
    caller to pick one column. Decimal point is ``.``, one sample per line.

Metadata JSON
    An object with keys ``participant_id``, ``age``, ``gender`` ("M"/"F")
    and ``sampling_rate_hz``. Unknown keys are ignored.

Ages outside 21-89 years are rejected at ingest, as are non-finite
sample values, so everything downstream can assume clean records.
"""

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParseError, ValidationError

AGE_MIN = 21
AGE_MAX = 89

GENDERS = ("M", "F")


@dataclass(frozen=True)
class EcgRecord:
    """One participant's sampled single-lead ECG trace plus metadata."""

    participant_id: str
    age: int
    gender: str
    sampling_rate_hz: float
    samples: np.ndarray
    source_label: str = ""

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise ValidationError(
                f"gender must be one of {GENDERS}, got {self.gender!r}"
            )
        if not (AGE_MIN <= int(self.age) <= AGE_MAX):
            raise ValidationError(
                f"age {self.age} outside supported range {AGE_MIN}-{AGE_MAX}"
            )
        if not self.sampling_rate_hz > 0:
            raise ValidationError("sampling_rate_hz must be positive")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValidationError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            bad = int(np.flatnonzero(~np.isfinite(samples))[0])
            raise ValidationError(f"non-finite sample value at index {bad}")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sampling_rate_hz

    def with_samples(self, samples) -> "EcgRecord":
        """Copy of this record carrying a new sample array."""
        return replace(self, samples=np.asarray(samples, dtype=float))


def _parse_float(token: str, path, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"not a number: {token!r}", path=path, line=line_no)
    return value


def read_signal_csv(path, column=None):
    """Parse a signal CSV into a float array of millivolt samples.

    ``column`` selects a column by name or zero-based index and is
    mandatory for files with more than two columns (multi-lead exports);
    for ``t,mv`` files the ``mv`` column is used automatically.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty signal file", path=path)

    header = None
    first = rows[0]
    if any(not _is_number(tok) for tok in first if tok != ""):
        header = [tok.strip() for tok in first]
        rows = rows[1:]
        if not rows:
            raise ParseError("signal file has a header but no data", path=path)

    n_cols = len(rows[0])
    col_idx = _resolve_column(header, n_cols, column, path)

    values = np.empty(len(rows))
    offset = 2 if header is not None else 1
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise ParseError(
                f"expected {n_cols} columns, got {len(row)}",
                path=path,
                line=i + offset,
            )
        values[i] = _parse_float(row[col_idx], path, i + offset)
    return values


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _resolve_column(header, n_cols, column, path):
    if column is not None:
        if isinstance(column, int):
            if not 0 <= column < n_cols:
                raise ParseError(f"column index {column} out of range", path=path)
            return column
        if header is None or column not in header:
            raise ParseError(f"no column named {column!r}", path=path)
        return header.index(column)
    if n_cols == 1:
        return 0
    if header is not None and "mv" in header:
        return header.index("mv")
    if n_cols == 2 and header is not None and header[0] == "t":
        return 1
    raise ParseError(
        f"{n_cols}-column file needs an explicit column selection", path=path
    )


def read_metadata(path) -> dict:
    with open(path) as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", path=path, line=exc.lineno)
    if not isinstance(meta, dict):
        raise ParseError("metadata must be a JSON object", path=path)
    missing = [
        k
        for k in ("participant_id", "age", "gender", "sampling_rate_hz")
        if k not in meta
    ]
    if missing:
        raise ParseError(f"metadata missing keys: {missing}", path=path)
    return meta


def read_record(
    signal_path,
    metadata_path,
    *,
    column=None,
    start_s: float = 0.0,
    duration_s: float | None = None,
    source_label: str = "",
) -> EcgRecord:
    """Load and validate one recording.

    When a segment window is configured only the span
    ``[start_s, start_s + duration_s)`` of the trace is retained, which is
    how long archive exports are trimmed down to an analysis segment.
    """
    meta = read_metadata(metadata_path)
    samples = read_signal_csv(signal_path, column=column)

    fs = float(meta["sampling_rate_hz"])
    if fs <= 0 or not math.isfinite(fs):
        raise ValidationError(f"sampling_rate_hz must be positive, got {fs}")
    if start_s or duration_s is not None:
        lo = int(round(start_s * fs))
        hi = samples.size if duration_s is None else lo + int(round(duration_s * fs))
        if not 0 <= lo < samples.size:
            raise ValidationError(
                f"segment start {start_s}s outside the {samples.size / fs:.1f}s record"
            )
        samples = samples[lo:hi]

    try:
        age = int(meta["age"])
    except (TypeError, ValueError):
        raise ValidationError(f"age must be an integer, got {meta['age']!r}")

    return EcgRecord(
        participant_id=str(meta["participant_id"]),
        age=age,
        gender=str(meta["gender"]),
        sampling_rate_hz=fs,
        samples=samples,
        source_label=source_label,
    )


def write_record(record: EcgRecord, signal_path, metadata_path=None) -> None:
    """Write a record back to disk in the ingest format.

    Sample values are emitted with ``repr`` so a read/write cycle
    reproduces the text exactly (float repr round-trips).
    """
    with open(signal_path, "w", newline="") as fh:
        fh.write("mv\n")
        for v in record.samples:
            fh.write(repr(float(v)) + "\n")
    if metadata_path is not None:
        meta = {
            "participant_id": record.participant_id,
            "age": record.age,
            "gender": record.gender,
            "sampling_rate_hz": record.sampling_rate_hz,
        }
        with open(metadata_path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
