import numpy as np
import pytest

from ecgaudit.errors import ConfigError, InputError
from ecgaudit.io import EcgRecord
from ecgaudit.preprocess import FilterSpec, clean, highpass_butterworth, powerline_notch

FS = 250.0


def tone(freq, fs, duration_s=30.0, amplitude=1.0):
    t = np.arange(int(duration_s * fs)) / fs
    return amplitude * np.sin(2 * np.pi * freq * t)


def central_rms(x):
    n = len(x)
    return float(np.sqrt(np.mean(x[n // 4 : 3 * n // 4] ** 2)))


def butterworth_highpass_gain_db(freq, cutoff, order):
    """Analytic zero-phase gain: |H|^2 applied once more for backward pass."""
    h2 = 1.0 / (1.0 + (cutoff / freq) ** (2 * order))
    return 10.0 * np.log10(h2 * h2)


def notch_gain_db(freq, fs, spec):
    """Evaluate the designed biquad's response at freq from its coefficients."""
    from scipy.signal import iirnotch

    b, a = iirnotch(spec.powerline_freq_hz, spec.notch_quality, fs=fs)
    z = np.exp(-1j * 2 * np.pi * freq / fs)
    h = np.polyval(b[::-1], z) / np.polyval(a[::-1], z)
    return 20.0 * np.log10(abs(h) ** 2)  # squared: forward-backward pass


class TestHighpass:
    def test_dc_fully_rejected(self):
        x = np.ones(int(30 * FS))
        y = highpass_butterworth(x, FS)
        settled = y[int(2 * FS) :]
        assert np.max(np.abs(settled)) < 1e-6

    def test_passband_5hz_within_1db_of_analytic(self):
        x = tone(5.0, FS)
        y = highpass_butterworth(x, FS)
        gain_db = 20 * np.log10(central_rms(y) / central_rms(x))
        assert abs(gain_db) <= 1.0
        analytic = butterworth_highpass_gain_db(5.0, 0.5, 5)
        assert gain_db == pytest.approx(analytic, abs=0.2)

    def test_stopband_005hz_attenuated_40db(self):
        x = tone(0.05, FS, duration_s=120.0)
        y = highpass_butterworth(x, FS)
        atten_db = -20 * np.log10(central_rms(y) / central_rms(x))
        assert atten_db >= 40.0
        # the analytic oracle predicts far deeper suppression than required
        assert butterworth_highpass_gain_db(0.05, 0.5, 5) < -40.0

    def test_cutoff_at_nyquist_rejected(self):
        with pytest.raises(ConfigError):
            highpass_butterworth(np.zeros(1000), FS, FilterSpec(highpass_cutoff_hz=125.0))

    def test_too_short_input_rejected(self):
        with pytest.raises(InputError):
            highpass_butterworth(np.zeros(5), FS)


class TestNotch:
    def test_50hz_suppressed_to_1pct(self):
        fs = 500.0
        x = tone(50.0, fs)
        y = powerline_notch(x, fs)
        assert central_rms(y) <= 0.01 * central_rms(x)
        assert notch_gain_db(50.0, fs, FilterSpec()) < -80.0

    def test_5hz_passes_within_half_db(self):
        fs = 500.0
        x = tone(5.0, fs)
        y = powerline_notch(x, fs)
        gain_db = 20 * np.log10(central_rms(y) / central_rms(x))
        assert abs(gain_db) <= 0.5
        assert gain_db == pytest.approx(notch_gain_db(5.0, fs, FilterSpec()), abs=0.1)

    def test_zero_stays_zero(self):
        y = powerline_notch(np.zeros(5000), 500.0)
        assert np.allclose(y, 0.0)

    def test_notch_at_nyquist_rejected(self):
        with pytest.raises(ConfigError):
            powerline_notch(np.zeros(1000), 100.0, FilterSpec(powerline_freq_hz=50.0))


def _record(samples, fs=FS):
    return EcgRecord(
        participant_id="p0", age=40, gender="F",
        sampling_rate_hz=fs, samples=samples,
    )


class TestClean:
    def test_defaults(self):
        spec = FilterSpec()
        assert spec.highpass_cutoff_hz == 0.5
        assert spec.highpass_order == 5
        assert spec.powerline_freq_hz == 50.0

    def test_metadata_unchanged(self):
        record = _record(tone(10.0, FS))
        out = clean(record)
        assert out.participant_id == record.participant_id
        assert out.age == record.age
        assert out.samples.size == record.samples.size

    def test_idempotence_on_in_band_content(self):
        from ecgaudit.synth import SyntheticPopulationConfig, generate_record

        config = SyntheticPopulationConfig(
            n_participants=1, seed=9, duration_s=30.0, noise_snr_db=40.0
        )
        record, _ = generate_record(config, 0)
        once = clean(record)
        twice = clean(once)
        err = np.sqrt(np.mean((twice.samples - once.samples) ** 2))
        assert err <= 0.02 * np.sqrt(np.mean(once.samples**2))

    def test_superposition_keeps_only_in_band_tone(self):
        fs = 500.0
        wanted = tone(10.0, fs)
        x = 0.8 + tone(50.0, fs) + wanted
        y = clean(_record(x, fs)).samples
        n = len(x)
        mid = slice(n // 4, 3 * n // 4)
        residual = np.sqrt(np.mean((y[mid] - wanted[mid]) ** 2))
        assert residual <= 0.02 * np.sqrt(np.mean(wanted[mid] ** 2))

    def test_linearity(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=4000)
        y = rng.normal(size=4000)
        a, b = 2.5, -1.25
        lhs = clean(_record(a * x + b * y)).samples
        rhs = a * clean(_record(x)).samples + b * clean(_record(y)).samples
        assert np.max(np.abs(lhs - rhs)) <= 1e-9 * max(np.max(np.abs(rhs)), 1.0)

    def test_zero_phase_no_lag(self):
        x = tone(10.0, FS)
        y = clean(_record(x)).samples
        n = len(x)
        mid_x = x[n // 4 : 3 * n // 4]
        mid_y = y[n // 4 : 3 * n // 4]
        corr = np.correlate(mid_y, mid_x, mode="full")
        lag = int(np.argmax(corr)) - (len(mid_x) - 1)
        assert lag == 0

    def test_output_finite(self):
        rng = np.random.default_rng(2)
        y = clean(_record(rng.normal(size=3000) * 100)).samples
        assert np.all(np.isfinite(y))
