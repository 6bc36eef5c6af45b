import json

import numpy as np
import pytest

from ecgaudit.errors import ParseError, ValidationError
from ecgaudit.io import EcgRecord, read_record, read_signal_csv, write_record
from ecgaudit.synth import (
    SyntheticPopulationConfig,
    _draw_morphology,
    generate_population,
)


def _write_pair(tmp_path, samples, meta, name="rec"):
    signal = tmp_path / f"{name}.csv"
    metadata = tmp_path / f"{name}.json"
    signal.write_text("mv\n" + "".join(f"{v}\n" for v in samples))
    metadata.write_text(json.dumps(meta))
    return signal, metadata


MITDB_META = {
    "participant_id": "mitdb_100",
    "age": 69,
    "gender": "M",
    "sampling_rate_hz": 360,
}


class TestReadRecord:
    def test_mitdb_like_record(self, tmp_path):
        # 360 000 samples at 360 Hz is 1000 s of data
        samples = np.zeros(360_000)
        samples[::360] = 1.0
        signal, metadata = _write_pair(tmp_path, samples, MITDB_META)
        record = read_record(signal, metadata)
        assert record.participant_id == "mitdb_100"
        assert record.sampling_rate_hz == 360
        assert record.duration_s == pytest.approx(1000.0)
        assert record.samples.size == 360_000

    def test_age_below_range_rejected(self, tmp_path):
        meta = dict(MITDB_META, age=20)
        signal, metadata = _write_pair(tmp_path, [0.1, 0.2], meta)
        with pytest.raises(ValidationError):
            read_record(signal, metadata)

    def test_two_reads_are_equal(self, tmp_path):
        signal, metadata = _write_pair(tmp_path, [0.5, -0.25, 1.0], MITDB_META)
        a = read_record(signal, metadata)
        b = read_record(signal, metadata)
        assert a.participant_id == b.participant_id
        assert np.array_equal(a.samples, b.samples)

    def test_malformed_csv_reports_line(self, tmp_path):
        signal = tmp_path / "bad.csv"
        signal.write_text("mv\n0.1\nnot-a-number\n0.3\n")
        _, metadata = _write_pair(tmp_path, [0.0], MITDB_META)
        with pytest.raises(ParseError) as err:
            read_record(signal, metadata)
        assert err.value.line == 3

    def test_non_finite_sample_rejected(self, tmp_path):
        signal = tmp_path / "inf.csv"
        signal.write_text("mv\n0.1\ninf\n")
        _, metadata = _write_pair(tmp_path, [0.0], MITDB_META)
        with pytest.raises(ValidationError):
            read_record(signal, metadata)

    def test_segment_window(self, tmp_path):
        samples = np.arange(3600) / 100.0
        signal, metadata = _write_pair(tmp_path, samples, MITDB_META)
        record = read_record(signal, metadata, start_s=1.0, duration_s=2.0)
        assert record.samples.size == 720
        assert record.samples[0] == pytest.approx(3.6)

    def test_missing_metadata_key(self, tmp_path):
        signal, metadata = _write_pair(
            tmp_path, [0.1], {"participant_id": "x", "age": 30, "gender": "M"}
        )
        with pytest.raises(ParseError):
            read_record(signal, metadata)

    def test_unknown_metadata_keys_ignored(self, tmp_path):
        meta = dict(MITDB_META, vendor="acme", lead="II")
        signal, metadata = _write_pair(tmp_path, [0.1, 0.2], meta)
        record = read_record(signal, metadata)
        assert record.age == 69


class TestSignalColumns:
    def test_t_mv_header_selects_mv(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,mv\n0.0,0.5\n0.004,0.6\n")
        assert np.allclose(read_signal_csv(path), [0.5, 0.6])

    def test_headerless_single_column(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("0.5\n0.6\n")
        assert np.allclose(read_signal_csv(path), [0.5, 0.6])

    def test_multi_column_requires_selection(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("lead1,lead2,lead3\n1,2,3\n4,5,6\n")
        with pytest.raises(ParseError):
            read_signal_csv(path)
        assert np.allclose(read_signal_csv(path, column="lead2"), [2, 5])
        assert np.allclose(read_signal_csv(path, column=2), [3, 6])


class TestRoundTrip:
    def test_write_read_reproduces_text(self, tmp_path):
        rng = np.random.default_rng(0)
        samples = rng.normal(size=50)
        signal, metadata = _write_pair(
            tmp_path, [repr(float(v)) for v in samples], MITDB_META
        )
        record = read_record(signal, metadata)
        out_sig = tmp_path / "out.csv"
        out_meta = tmp_path / "out.json"
        write_record(record, out_sig, out_meta)
        assert out_sig.read_text() == signal.read_text()
        again = read_record(out_sig, out_meta)
        assert np.array_equal(again.samples, record.samples)


class TestSyntheticPopulation:
    def test_length_arithmetic(self):
        config = SyntheticPopulationConfig(
            n_participants=2, seed=7, duration_s=30.0, sampling_rate_hz=250.0
        )
        records, truth = generate_population(config)
        assert len(records) == 2
        assert all(r.samples.size == 7500 for r in records)
        assert set(truth) == {r.participant_id for r in records}

    def test_seed_sensitivity(self):
        base = dict(n_participants=2, duration_s=30.0)
        a, _ = generate_population(SyntheticPopulationConfig(seed=7, **base))
        b, _ = generate_population(SyntheticPopulationConfig(seed=8, **base))
        assert not np.array_equal(a[0].samples, b[0].samples)

    def test_bit_identical_regeneration(self):
        config = SyntheticPopulationConfig(n_participants=3, seed=11, duration_s=20.0)
        a, truth_a = generate_population(config)
        b, truth_b = generate_population(config)
        for ra, rb in zip(a, b):
            assert np.array_equal(ra.samples, rb.samples)
            assert ra.age == rb.age and ra.gender == rb.gender
        for pid in truth_a:
            assert np.array_equal(truth_a[pid].r_indices, truth_b[pid].r_indices)

    def test_empty_population_rejected(self):
        with pytest.raises(ValidationError):
            generate_population(SyntheticPopulationConfig(n_participants=0, seed=1))

    def test_records_satisfy_invariants(self):
        config = SyntheticPopulationConfig(n_participants=5, seed=3, duration_s=15.0)
        records, truth = generate_population(config)
        for record in records:
            assert np.all(np.isfinite(record.samples))
            assert 21 <= record.age <= 89
            assert record.gender in ("M", "F")
            gt = truth[record.participant_id]
            assert np.all(np.diff(gt.r_indices) > 0)
            assert gt.r_indices.min() >= 0
            assert gt.r_indices.max() < record.samples.size

    def test_morphologies_distinct(self):
        config = SyntheticPopulationConfig(n_participants=12, seed=5)
        seen = set()
        for i in range(config.n_participants):
            morph = _draw_morphology(config, i)
            key = tuple(morph.waves[w] for w in sorted(morph.waves))
            assert key not in seen
            seen.add(key)
