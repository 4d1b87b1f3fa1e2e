"""Tests for STFT, mel filterbanks, Log-Mel, SpecAugment and per-case featurization."""

from dataclasses import replace

import numpy as np
import pytest

from src.audio.clip import AudioClip
from src.audio.routing import CASES, CaseId
from src.config import DspConfig
from src.features.augment import SpecAugmentPolicy, spec_augment
from src.features.featurizer import AugmentationLeakError, CaseFeaturizer
from src.features.logmel import LogMelSpectrogram, log_mel, power_to_db
from src.features.mel import InvalidBandError, hz_to_mel, mel_filterbank, mel_to_hz
from src.features.stft import ClipTooShortError, StftConfig, stft, stft_config_for


def _spec(values: np.ndarray) -> LogMelSpectrogram:
    return LogMelSpectrogram(values=values, mel_bins=values.shape[0], frame_rate=31.25, source_rate=8000)


class TestStftConfig:
    """STFT geometry validation."""

    def test_non_power_of_two_raises(self):
        with pytest.raises(ValueError):
            StftConfig(n_fft=1000, hop=250)

    def test_hop_bounds(self):
        with pytest.raises(ValueError):
            StftConfig(n_fft=512, hop=0)
        with pytest.raises(ValueError):
            StftConfig(n_fft=512, hop=513)

    def test_per_rate_defaults(self):
        assert stft_config_for(4000) == StftConfig(1024, 256)
        assert stft_config_for(8000) == StftConfig(1024, 256)
        assert stft_config_for(32000) == StftConfig(2048, 512)
        assert stft_config_for(48000) == StftConfig(2048, 512)


class TestStft:
    """Short-time Fourier transform."""

    def test_zero_clip_gives_zero_magnitude(self):
        out = stft(AudioClip(np.zeros(4000), 4000), StftConfig(1024, 256))
        assert np.all(np.abs(out) == 0.0)

    def test_shape(self):
        out = stft(AudioClip(np.zeros(4000), 4000), StftConfig(512, 250))
        assert out.shape == (257, 17)

    def test_frame_count_formula(self, rng):
        for _ in range(50):
            length = int(rng.integers(2, 20000))
            hop = int(rng.integers(1, 513))
            cfg = StftConfig(512, hop)
            out = stft(AudioClip(np.zeros(length), 8000), cfg)
            assert out.shape[1] == 1 + length // hop == cfg.n_frames(length)

    def test_bin_centred_sine_energy_is_local(self):
        n_fft, k, rate = 1024, 50, 4000
        t = np.arange(rate) / rate
        clip = AudioClip(0.5 * np.sin(2 * np.pi * (k * rate / n_fft) * t), rate)
        power = np.abs(stft(clip, StftConfig(n_fft, 256))) ** 2
        frame = power[:, 8]
        assert frame[k - 1 : k + 2].sum() >= 0.9 * frame.sum()

    def test_uncentred_short_clip_raises(self):
        with pytest.raises(ClipTooShortError):
            stft(AudioClip(np.zeros(100), 4000), StftConfig(256, 64, center=False))

    def test_uncentred_frame_count(self):
        cfg = StftConfig(256, 64, center=False)
        out = stft(AudioClip(np.zeros(1000), 4000), cfg)
        assert out.shape[1] == 1 + (1000 - 256) // 64

    def test_single_sample_clip(self):
        out = stft(AudioClip(np.array([0.5]), 4000), StftConfig(256, 64))
        assert out.shape == (129, 1)


class TestMelScale:
    """HTK and Slaney mel conversions."""

    def test_zero_hz(self):
        assert hz_to_mel(0.0) == 0.0

    def test_one_khz(self):
        assert abs(float(hz_to_mel(1000.0)) - 1000.1) <= 0.5

    def test_inverse(self):
        hz = np.array([0.0, 50.0, 440.0, 1000.0, 3999.0, 16000.0])
        for scale in ("htk", "slaney"):
            np.testing.assert_allclose(mel_to_hz(hz_to_mel(hz, scale), scale), hz, atol=1e-6)

    def test_slaney_is_linear_below_1khz(self):
        np.testing.assert_allclose(hz_to_mel(np.array([200.0, 400.0]), "slaney"), [3.0, 6.0])


class TestMelFilterbank:
    """Triangular filterbank construction."""

    def test_shape_for_four_khz_case(self):
        bank = mel_filterbank(4000, 1024, 256, 50.0, 2000.0)
        assert bank.weights.shape == (256, 513)
        assert bank.n_mels == 256
        assert bank.n_fft == 1024

    def test_weights_nonnegative_and_rows_nonempty(self):
        bank = mel_filterbank(4000, 1024, 256, 50.0, 2000.0)
        assert np.all(bank.weights >= 0)
        assert np.all(bank.weights.max(axis=1) > 0)

    @pytest.mark.parametrize(("rate", "n_fft", "n_mels"), [(4000, 1024, 256), (8000, 1024, 128), (48000, 2048, 128)])
    def test_rows_unimodal(self, rate, n_fft, n_mels):
        bank = mel_filterbank(rate, n_fft, n_mels, 50.0, rate / 2)
        for row in bank.weights:
            nonzero = np.flatnonzero(row)
            segment = row[nonzero[0] : nonzero[-1] + 1]
            steps = np.sign(np.diff(segment))
            steps = steps[steps != 0]
            # at most one change from rising to falling
            assert np.count_nonzero(np.diff(steps) < 0) <= 1
            assert np.count_nonzero(np.diff(steps) > 0) == 0

    @pytest.mark.parametrize(("rate", "n_fft", "n_mels"), [(4000, 1024, 256), (8000, 1024, 128), (32000, 2048, 128)])
    def test_bin_coverage(self, rate, n_fft, n_mels):
        fmin, fmax = 50.0, rate / 2
        bank = mel_filterbank(rate, n_fft, n_mels, fmin, fmax)
        freqs = np.arange(n_fft // 2 + 1) * rate / n_fft
        inside = (freqs > fmin) & (freqs < fmax)
        assert np.all(bank.weights.sum(axis=0)[inside] > 0)

    def test_weights_read_only(self):
        bank = mel_filterbank(8000, 1024, 128, 50.0, 4000.0)
        with pytest.raises(ValueError):
            bank.weights[0, 0] = 1.0

    def test_invalid_band_raises(self):
        with pytest.raises(InvalidBandError):
            mel_filterbank(8000, 1024, 128, 500.0, 100.0)
        with pytest.raises(InvalidBandError):
            mel_filterbank(8000, 1024, 128, 0.0, 5000.0)

    def test_too_many_mels_raises(self):
        with pytest.raises(InvalidBandError):
            mel_filterbank(4000, 256, 200, 50.0, 2000.0)


class TestLogMel:
    """dB conversion and the Log-Mel pipeline."""

    def test_zero_clip_is_floor(self):
        spec = log_mel(AudioClip(np.zeros(4000), 4000), 128, StftConfig(1024, 256))
        assert np.all(spec.values == -100.0)

    def test_power_to_db_floor(self):
        db = power_to_db(np.array([0.0, 1e-12, 1e-10, 1.0]))
        np.testing.assert_array_equal(db[:3], -100.0)
        assert db[3] == 0.0

    def test_shape_four_khz_256_mels(self, sine_clip):
        spec = log_mel(sine_clip(freq=300.0, sample_rate=4000), 256, StftConfig(1024, 250))
        assert spec.shape == (256, 17)
        assert spec.mel_bins == 256
        assert spec.source_rate == 4000
        assert spec.frame_rate == pytest.approx(16.0)

    def test_amplitude_times_ten_adds_twenty_db(self, rng):
        base = 0.05 * rng.uniform(-1, 1, 8000)
        cfg = StftConfig(1024, 256)
        quiet = log_mel(AudioClip(base, 8000), 128, cfg).values
        loud = log_mel(AudioClip(10 * base, 8000), 128, cfg).values
        unclamped = (quiet > -100.0) & (loud > -100.0)
        assert unclamped.mean() > 0.9
        np.testing.assert_allclose(loud[unclamped] - quiet[unclamped], 20.0, atol=1e-6)

    def test_values_finite_and_floored(self, rng):
        spec = log_mel(AudioClip(rng.uniform(-1, 1, 12000), 48000), 128, StftConfig(2048, 512))
        assert np.all(np.isfinite(spec.values))
        assert spec.values.min() >= -100.0

    def test_shift_by_hop_shifts_columns(self, rng):
        hop = 256
        x = rng.uniform(-0.5, 0.5, 8000)
        cfg = StftConfig(1024, hop)
        original = log_mel(AudioClip(x, 8000), 128, cfg).values
        shifted = log_mel(AudioClip(np.roll(x, hop), 8000), 128, cfg).values
        np.testing.assert_allclose(shifted[:, 5:25], original[:, 4:24], atol=1e-9)

    def test_slaney_scale(self, sine_clip):
        spec = log_mel(sine_clip(sample_rate=8000), 128, StftConfig(1024, 256), mel_scale="slaney")
        assert spec.shape == (128, 32)


class TestSpecAugment:
    """Seeded frequency/time masking."""

    def test_zero_masks_identity(self, rng):
        values = rng.uniform(-80, 0, (64, 40))
        policy = SpecAugmentPolicy(num_freq_masks=0, num_time_masks=0)
        assert policy.is_identity
        out = spec_augment(_spec(values), policy, np.random.default_rng(0))
        np.testing.assert_array_equal(out.values, values)

    def test_seeded_replay(self, rng):
        values = rng.uniform(-80, 0, (64, 40))
        policy = SpecAugmentPolicy(num_freq_masks=1, max_freq_width=10, num_time_masks=0)
        out = spec_augment(_spec(values), policy, np.random.default_rng(7))

        replay = np.random.default_rng(7)
        width = min(int(replay.integers(0, 11)), 64)
        start = int(replay.integers(0, 64 - width + 1))
        expected = values.copy()
        expected[start : start + width, :] = -100.0
        np.testing.assert_array_equal(out.values, expected)

        again = spec_augment(_spec(values), policy, np.random.default_rng(7))
        np.testing.assert_array_equal(again.values, out.values)

    def test_masks_stay_in_bounds(self):
        values = np.zeros((20, 30))
        policy = SpecAugmentPolicy(num_freq_masks=2, max_freq_width=25, num_time_masks=2, max_time_width=40)
        budget = 2 * 20 * 30 + 2 * 30 * 20
        for seed in range(10_000):
            out = spec_augment(_spec(values), policy, np.random.default_rng(seed)).values
            assert out.shape == (20, 30)
            changed = out != 0.0
            assert np.all(out[changed] == -100.0)
            assert np.count_nonzero(changed) <= budget

    def test_changed_cells_bounded_by_mask_area(self, rng):
        values = rng.uniform(-80, 0, (128, 60))
        policy = SpecAugmentPolicy()
        out = spec_augment(_spec(values), policy, np.random.default_rng(3)).values
        changed = out != values
        assert np.count_nonzero(changed) <= 2 * 16 * 60 + 2 * 24 * 128
        assert np.all(out[changed] == policy.fill)

    def test_output_marked_augmented(self, rng):
        spec = _spec(rng.uniform(-80, 0, (16, 16)))
        out = spec_augment(spec, SpecAugmentPolicy(), np.random.default_rng(0))
        assert out.augmented is True
        assert spec.augmented is False

    def test_negative_width_rejected(self):
        with pytest.raises(ValueError):
            SpecAugmentPolicy(max_time_width=-1)


class TestCaseFeaturizer:
    """Per-case feature extraction."""

    def test_four_khz_case(self, sine_clip):
        feats = CaseFeaturizer(CASES[CaseId.CASE_4K], DspConfig()).featurize(sine_clip(sample_rate=4000))
        assert feats.stage1.shape == (256, 1 + 4000 // 256)
        assert feats.stage1.source_rate == 4000
        assert feats.stage2.shape == (128, 1 + 8000 // 256)
        assert feats.stage2.source_rate == 8000
        assert feats.waveform is None

    def test_forty_eight_khz_case_carries_waveform(self, sine_clip):
        feats = CaseFeaturizer(CASES[CaseId.CASE_48K], DspConfig()).featurize(sine_clip(sample_rate=48000))
        assert feats.stage1.shape == (128, 1 + 48000 // 512)
        assert feats.stage2.source_rate == 32000
        assert feats.waveform is not None
        assert feats.waveform.sample_rate == 32000
        assert len(feats.waveform) == 32000

    def test_non_anchor_rate_is_resampled(self, sine_clip):
        feats = CaseFeaturizer(CASES[CaseId.CASE_48K], DspConfig()).featurize(sine_clip(sample_rate=44100))
        assert feats.stage1.source_rate == 48000

    def test_short_clip_repeat_padded(self, sine_clip):
        featurizer = CaseFeaturizer(CASES[CaseId.CASE_8K], DspConfig())
        prepared = featurizer.prepare(sine_clip(sample_rate=8000, seconds=0.1))
        assert len(prepared) == 4000

    def test_long_clip_cropped(self, sine_clip):
        featurizer = CaseFeaturizer(CASES[CaseId.CASE_8K], DspConfig())
        feats = featurizer.featurize(sine_clip(sample_rate=8000, seconds=6.0))
        assert feats.stage1.n_frames == 1 + 32000 // 256

    def test_assert_clean_detects_augmentation(self, sine_clip):
        feats = CaseFeaturizer(CASES[CaseId.CASE_8K], DspConfig()).featurize(sine_clip(sample_rate=8000))
        feats.assert_clean()
        masked = replace(feats, stage1=spec_augment(feats.stage1, SpecAugmentPolicy(), np.random.default_rng(0)))
        with pytest.raises(AugmentationLeakError):
            masked.assert_clean()
