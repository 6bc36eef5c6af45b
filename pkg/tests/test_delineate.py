import numpy as np
import pytest
from scipy.signal import resample_poly

from ecgaudit.delineate import (
    delineate_beats,
    detect_r_peaks,
    read_annotations_csv,
    write_annotations_csv,
)
from ecgaudit.errors import ConfigError, InputError
from ecgaudit.preprocess import clean
from ecgaudit.synth import BASE_WAVES, SyntheticPopulationConfig, generate_record

FS = 250.0


def single_beat_signal(fs=FS, duration_s=10.0, r_time=5.0, waves=BASE_WAVES):
    t = np.arange(int(duration_s * fs)) / fs
    x = np.zeros_like(t)
    for amp, offset, width in waves.values():
        x += amp * np.exp(-0.5 * ((t - r_time - offset) / width) ** 2)
    return x


def match_rate(detected_times, true_times, tol_s):
    hits = 0
    for tt in true_times:
        if len(detected_times) and np.min(np.abs(detected_times - tt)) <= tol_s:
            hits += 1
    return hits / max(len(true_times), 1)


class TestDetectRPeaks:
    def test_noisy_synthetic_recall_precision(self):
        config = SyntheticPopulationConfig(
            n_participants=1, seed=21, duration_s=60.0, noise_snr_db=10.0
        )
        record, truth = generate_record(config, 0)
        cleaned = clean(record)
        detected = detect_r_peaks(cleaned.samples, FS)
        det_t = detected / FS
        true_t = truth.r_indices / FS
        assert match_rate(det_t, true_t, 0.050) >= 0.98  # recall
        assert match_rate(true_t, det_t, 0.050) >= 0.98  # precision

    def test_flat_signal_gives_no_peaks(self):
        assert detect_r_peaks(np.zeros(int(10 * FS)), FS).size == 0

    def test_single_beat_within_20ms(self):
        x = single_beat_signal()
        detected = detect_r_peaks(x, FS)
        assert detected.size == 1
        assert abs(detected[0] / FS - 5.0) <= 0.020

    def test_low_sampling_rate_rejected(self):
        with pytest.raises(ConfigError):
            detect_r_peaks(np.zeros(500), 80.0)

    def test_short_signal_rejected(self):
        with pytest.raises(InputError):
            detect_r_peaks(np.zeros(int(1.5 * FS)), FS)

    def test_refractory_spacing(self):
        config = SyntheticPopulationConfig(n_participants=1, seed=4, duration_s=40.0)
        record, _ = generate_record(config, 0)
        detected = detect_r_peaks(clean(record).samples, FS)
        assert np.all(np.diff(detected) >= int(0.2 * FS))


class TestDelineateBeats:
    def test_clean_beat_fiducials_within_25ms(self):
        x = single_beat_signal()
        r = detect_r_peaks(x, FS)
        beats = delineate_beats(x, FS, r)
        assert len(beats) == 1
        beat = beats[0]
        for wave in ("P", "Q", "S", "T"):
            true_time = 5.0 + BASE_WAVES[wave][1]
            assert beat.time(wave) == pytest.approx(true_time, abs=0.025)

    def test_first_beat_without_p_room_is_kept(self):
        x = np.zeros(int(4 * FS))
        x[2] = 1.0  # R at 8 ms: no room for a P search window
        beats = delineate_beats(x, FS, [2])
        assert len(beats) == 1
        assert beats[0].p_index is None
        assert beats[0].r_index == 2

    def test_ordering_and_monotonicity(self):
        config = SyntheticPopulationConfig(n_participants=1, seed=13, duration_s=60.0)
        record, _ = generate_record(config, 0)
        cleaned = clean(record)
        r = detect_r_peaks(cleaned.samples, FS)
        beats = delineate_beats(cleaned.samples, FS, r)
        assert [b.r_index for b in beats] == sorted(b.r_index for b in beats)
        for beat in beats:
            present = [
                beat.index(k)
                for k in ("P", "Q", "R", "S", "T")
                if beat.index(k) is not None
            ]
            assert present == sorted(present)
            assert len(set(present)) == len(present)

    def test_amplitude_consistency_exact(self):
        config = SyntheticPopulationConfig(n_participants=1, seed=8, duration_s=30.0)
        record, _ = generate_record(config, 0)
        cleaned = clean(record)
        r = detect_r_peaks(cleaned.samples, FS)
        for beat in delineate_beats(cleaned.samples, FS, r):
            for kind in ("P", "Q", "R", "S", "T"):
                idx = beat.index(kind)
                if idx is not None:
                    assert beat.amplitude(kind) == cleaned.samples[idx]

    def test_time_rescaling_equivariance(self):
        config = SyntheticPopulationConfig(
            n_participants=1, seed=17, duration_s=30.0,
            noise_snr_db=80.0, baseline_wander_mv=0.0,
        )
        record, _ = generate_record(config, 0)
        x = record.samples
        x2 = resample_poly(x, 2, 1)
        beats1 = delineate_beats(x, FS, detect_r_peaks(x, FS))
        beats2 = delineate_beats(x2, 2 * FS, detect_r_peaks(x2, 2 * FS))
        assert len(beats1) == len(beats2)
        for b1, b2 in zip(beats1, beats2):
            for kind in ("P", "Q", "R", "S", "T"):
                t1, t2 = b1.time(kind), b2.time(kind)
                if t1 is not None and t2 is not None:
                    assert abs(t1 - t2) < 1.0 / FS

    def test_empty_r_peaks(self):
        assert delineate_beats(np.zeros(1000), FS, []) == []

    def test_out_of_range_r_peaks_rejected(self):
        with pytest.raises(InputError):
            delineate_beats(np.zeros(100), FS, [500])


class TestAnnotationCsv:
    def test_round_trip(self, tmp_path):
        config = SyntheticPopulationConfig(n_participants=1, seed=2, duration_s=30.0)
        record, _ = generate_record(config, 0)
        cleaned = clean(record)
        r = detect_r_peaks(cleaned.samples, FS)
        beats = delineate_beats(cleaned.samples, FS, r)
        path = tmp_path / "ann.csv"
        write_annotations_csv(beats, path)
        again = read_annotations_csv(path, cleaned.samples, FS)
        assert again == beats
