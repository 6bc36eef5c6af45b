"""R-peak detection and PQRST fiducial delineation.

Detection runs the classic Pan-Tompkins stages over the cleaned signal:
5-15 Hz bandpass, derivative, squaring, moving-window integration, then
adaptive dual thresholds with search-back and a 200 ms refractory period.
Accepted events are snapped to the local maximum of the input signal, so
a positive R deflection is assumed (invert the lead upstream if needed).

Delineation places the remaining fiducials by window-limited extremum
search around each R peak: Q and S are minima within 80 ms of R, P is a
maximum in a 200 ms span before Q, T a maximum between 80 and 400 ms
after S, with windows clipped at neighboring beats. Candidate location
is steered by a short Hann-smoothed copy of the signal (noise would
otherwise dominate the argmax), then snapped to the extremum of the
actual samples nearby, so reported amplitudes always equal the signal
value at the reported index.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import ConfigError, InputError

PEAK_KINDS = ("P", "Q", "R", "S", "T")


@dataclass(frozen=True)
class BeatAnnotation:
    """Fiducial sample indices, amplitudes (mV) and times (s) of one beat."""

    r_index: int
    p_index: int | None
    q_index: int | None
    s_index: int | None
    t_index: int | None
    amp_r: float
    amp_p: float | None
    amp_q: float | None
    amp_s: float | None
    amp_t: float | None
    time_r: float
    time_p: float | None
    time_q: float | None
    time_s: float | None
    time_t: float | None

    def index(self, kind: str):
        return getattr(self, f"{kind.lower()}_index")

    def amplitude(self, kind: str):
        return getattr(self, f"amp_{kind.lower()}")

    def time(self, kind: str):
        return getattr(self, f"time_{kind.lower()}")


@dataclass(frozen=True)
class DelineationWindows:
    """Search-window geometry, in seconds. Defaults follow standard ECG
    physiology bounds (QRS half-width 80 ms, P up to 200 ms before Q,
    T between 80 and 400 ms after S)."""

    qs_span_s: float = 0.08
    p_gap_s: float = 0.02
    p_span_s: float = 0.20
    t_gap_s: float = 0.08
    t_span_s: float = 0.40
    smooth_narrow_s: float = 0.022  # steers Q/S candidate location
    smooth_wide_s: float = 0.032  # steers P/T candidate location
    snap_radius_s: float = 0.012


def detect_r_peaks(samples, fs: float) -> np.ndarray:
    """Pan-Tompkins style R-peak detection on a cleaned signal.

    Returns strictly increasing sample indices with at least 200 ms
    between consecutive peaks.
    """
    if fs < 100:
        raise ConfigError(f"sampling rate {fs} Hz too low for QRS detection (>=100)")
    x = np.asarray(samples, dtype=float)
    if x.size < int(2 * fs):
        raise InputError("signal shorter than 2 s")

    # 1) bandpass 5-15 Hz isolates QRS energy
    sos = sps.butter(3, (5.0, 15.0), btype="bandpass", fs=fs, output="sos")
    band = sps.sosfiltfilt(sos, x)
    # 2-4) derivative, squaring, moving-window integration (150 ms)
    deriv = np.gradient(band) * fs
    squared = deriv**2
    win = max(int(round(0.150 * fs)), 1)
    mwi = np.convolve(squared, np.ones(win) / win, mode="same")

    floor = 1e-12 * max(np.max(np.abs(x)), 1.0) ** 2
    if np.max(mwi) <= floor:
        return np.asarray([], dtype=int)

    refractory = int(round(0.200 * fs))
    # the relative height floor rejects numerical dust (e.g. filter ringing
    # on an otherwise silent record) that the adaptive thresholds would
    # otherwise accept after a silent learning window
    candidates, _ = sps.find_peaks(
        mwi, distance=refractory, height=1e-4 * float(np.max(mwi))
    )
    if candidates.size == 0:
        return np.asarray([], dtype=int)

    # 5) adaptive dual thresholds with search-back
    learn = mwi[: int(2 * fs)]
    spki = 0.25 * float(np.max(learn))
    npki = 0.5 * float(np.mean(learn))
    threshold = npki + 0.25 * (spki - npki)

    t_wave_span = int(round(0.360 * fs))
    slope_half = int(round(0.075 * fs))

    def max_slope(c):
        lo = max(c - slope_half, 0)
        return float(np.max(np.abs(deriv[lo : c + slope_half + 1])))

    accepted = []
    rr_history = []
    missed = []  # sub-threshold candidates since the last accepted peak
    for cand in candidates:
        peak = mwi[cand]
        is_t_wave = bool(
            accepted
            and cand - accepted[-1] < t_wave_span
            and max_slope(cand) < 0.5 * max_slope(accepted[-1])
        )
        if peak > threshold and not is_t_wave:
            if accepted:
                rr_history.append(cand - accepted[-1])
            accepted.append(cand)
            spki = 0.125 * peak + 0.875 * spki
            missed = []
        else:
            if not is_t_wave:  # T waves are not search-back candidates
                missed.append(cand)
            npki = 0.125 * peak + 0.875 * npki
            # search-back: a long gap suggests a missed beat
            if rr_history and accepted:
                rr_avg = float(np.mean(rr_history[-8:]))
                if cand - accepted[-1] > 1.66 * rr_avg:
                    viable = [m for m in missed if mwi[m] > 0.5 * threshold]
                    if viable:
                        best = max(viable, key=lambda m: mwi[m])
                        rr_history.append(best - accepted[-1])
                        accepted.append(best)
                        spki = 0.25 * mwi[best] + 0.75 * spki
                        missed = [m for m in missed if m > best]
        threshold = npki + 0.25 * (spki - npki)

    accepted.sort()

    # snap each event to the actual R maximum of the input signal
    half = int(round(0.100 * fs))
    refined = []
    for cand in accepted:
        lo = max(cand - half, 0)
        hi = min(cand + half + 1, x.size)
        refined.append(lo + int(np.argmax(x[lo:hi])))

    # enforce the refractory period after refinement, keeping the taller peak
    result = []
    for idx in sorted(set(refined)):
        if result and idx - result[-1] < refractory:
            if x[idx] > x[result[-1]]:
                result[-1] = idx
        else:
            result.append(idx)
    return np.asarray(result, dtype=int)


def _smooth(x, fs, width_s):
    n = int(round(width_s * fs))
    n = max(n | 1, 3)  # odd length >= 3
    kernel = np.hanning(n + 2)[1:-1]
    kernel /= kernel.sum()
    return np.convolve(x, kernel, mode="same")


def _pick_extremum(x, steered, lo, hi, mode, snap):
    """Extremum index in [lo, hi): locate on the smoothed copy, then snap
    to the extremum of the raw samples within ``snap`` of that point."""
    if hi - lo < 1 or lo < 0 or hi > x.size:
        return None
    pick = np.argmax if mode == "max" else np.argmin
    i0 = lo + int(pick(steered[lo:hi]))
    a = max(lo, i0 - snap)
    b = min(hi, i0 + snap + 1)
    return a + int(pick(x[a:b]))


def delineate_beats(
    samples,
    fs: float,
    r_peaks,
    windows: DelineationWindows = DelineationWindows(),
) -> list[BeatAnnotation]:
    """Delineate P, Q, S, T around each R peak.

    Any fiducial whose search window is empty (record edge, early beat
    with no room for a P wave, tight RR) is marked absent; the beat is
    kept and later feature means simply skip the missing pairs.
    """
    x = np.asarray(samples, dtype=float)
    r_peaks = np.asarray(r_peaks, dtype=int)
    if r_peaks.size == 0:
        return []
    if r_peaks.min() < 0 or r_peaks.max() >= x.size:
        raise InputError("r_peaks outside the signal range")

    narrow = _smooth(x, fs, windows.smooth_narrow_s)
    wide = _smooth(x, fs, windows.smooth_wide_s)
    snap = int(round(windows.snap_radius_s * fs))

    qs_w = int(round(windows.qs_span_s * fs))
    p_gap = int(round(windows.p_gap_s * fs))
    p_w = int(round(windows.p_span_s * fs))
    t_gap = int(round(windows.t_gap_s * fs))
    t_w = int(round(windows.t_span_s * fs))

    beats = []
    for k, r in enumerate(r_peaks):
        prev_r = r_peaks[k - 1] if k > 0 else -1
        next_r = r_peaks[k + 1] if k + 1 < r_peaks.size else x.size

        q = _pick_extremum(
            x, narrow, max(r - qs_w, prev_r + 1, 0), r, "min", snap
        )
        s = _pick_extremum(
            x, narrow, r + 1, min(r + qs_w + 1, next_r, x.size), "min", snap
        )
        p = None
        if q is not None:
            p = _pick_extremum(
                x, wide, max(q - p_w, prev_r + 1, 0), max(q - p_gap, 0), "max", snap
            )
        t = None
        if s is not None:
            t = _pick_extremum(
                x, wide, s + t_gap, min(s + t_w + 1, next_r, x.size), "max", snap
            )

        def _amp(idx):
            return float(x[idx]) if idx is not None else None

        def _time(idx):
            return idx / fs if idx is not None else None

        beats.append(
            BeatAnnotation(
                r_index=int(r),
                p_index=p,
                q_index=q,
                s_index=s,
                t_index=t,
                amp_r=float(x[r]),
                amp_p=_amp(p),
                amp_q=_amp(q),
                amp_s=_amp(s),
                amp_t=_amp(t),
                time_r=r / fs,
                time_p=_time(p),
                time_q=_time(q),
                time_s=_time(s),
                time_t=_time(t),
            )
        )
    return beats


ANNOTATION_FIELDS = ("beat", "r_index", "p_index", "q_index", "s_index", "t_index")


def write_annotations_csv(beats, path) -> None:
    """Export fiducial indices for inspection or stage-wise reruns."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANNOTATION_FIELDS)
        for i, beat in enumerate(beats):
            writer.writerow(
                [i]
                + [
                    "" if beat.index(kind) is None else beat.index(kind)
                    for kind in ("R", "P", "Q", "S", "T")
                ]
            )


def read_annotations_csv(path, samples, fs: float) -> list[BeatAnnotation]:
    """Rebuild annotations from an exported CSV plus the cleaned signal."""
    x = np.asarray(samples, dtype=float)
    beats = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(ANNOTATION_FIELDS):
            raise InputError(
                f"unexpected annotation header {reader.fieldnames} in {path}"
            )
        for row in reader:
            idx = {}
            for kind in ("r", "p", "q", "s", "t"):
                raw = row[f"{kind}_index"]
                idx[kind] = None if raw == "" else int(raw)
            if idx["r"] is None or not 0 <= idx["r"] < x.size:
                raise InputError(f"bad r_index in {path}: {row}")

            def _amp(i):
                return float(x[i]) if i is not None else None

            def _time(i):
                return i / fs if i is not None else None

            beats.append(
                BeatAnnotation(
                    r_index=idx["r"],
                    p_index=idx["p"],
                    q_index=idx["q"],
                    s_index=idx["s"],
                    t_index=idx["t"],
                    amp_r=float(x[idx["r"]]),
                    amp_p=_amp(idx["p"]),
                    amp_q=_amp(idx["q"]),
                    amp_s=_amp(idx["s"]),
                    amp_t=_amp(idx["t"]),
                    time_r=idx["r"] / fs,
                    time_p=_time(idx["p"]),
                    time_q=_time(idx["q"]),
                    time_s=_time(idx["s"]),
                    time_t=_time(idx["t"]),
                )
            )
    return beats
