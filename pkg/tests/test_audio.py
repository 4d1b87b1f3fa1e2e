"""Tests for WAV decoding, resampling and sampling-rate routing."""

import struct

import numpy as np
import pytest

from src.audio.clip import AudioClip, InvalidClipError, crop, repeat_pad
from src.audio.resample import MAX_POLYPHASE, _lowpass, polyphase_factors, resample
from src.audio.routing import CASES, CaseId, StageTap, format_routes, route
from src.audio.wav import MalformedContainerError, UnsupportedEncodingError, decode_wav, encode_wav, read_wav

ROUTES_TABLE = (
    "case      anchor_hz  stage1_hz  stage1_mels  stage2_hz  stage2_mels  tap              wavegram\n"
    "CASE_4K   4000       4000       256          8000       128          CONV_BLOCK6_GEM  no\n"
    "CASE_8K   8000       8000       128          8000       128          EMBEDDING_LAYER  no\n"
    "CASE_48K  48000      48000      128          32000      128          EMBEDDING_LAYER  yes"
)


def _peak_hz(samples: np.ndarray, sample_rate: int) -> float:
    spectrum = np.abs(np.fft.rfft(samples))
    return float(np.argmax(spectrum) * sample_rate / samples.size)


class TestAudioClip:
    """AudioClip invariants."""

    def test_valid_clip(self):
        clip = AudioClip(np.zeros(10), 8000, "x")
        assert len(clip) == 10
        assert clip.duration == pytest.approx(10 / 8000)

    def test_samples_are_read_only(self):
        clip = AudioClip(np.zeros(10), 8000)
        with pytest.raises(ValueError):
            clip.samples[0] = 1.0

    def test_empty_raises(self):
        with pytest.raises(InvalidClipError):
            AudioClip(np.zeros(0), 8000)

    def test_nan_raises(self):
        with pytest.raises(InvalidClipError):
            AudioClip(np.array([0.0, np.nan]), 8000)

    def test_out_of_range_raises(self):
        with pytest.raises(InvalidClipError):
            AudioClip(np.array([0.0, 1.5]), 8000)

    def test_nonpositive_rate_raises(self):
        with pytest.raises(InvalidClipError):
            AudioClip(np.zeros(4), 0)

    def test_repeat_pad_tiles(self):
        clip = AudioClip(np.array([0.1, 0.2, 0.3]), 10)
        padded = repeat_pad(clip, 0.8)
        np.testing.assert_array_equal(padded.samples, [0.1, 0.2, 0.3, 0.1, 0.2, 0.3, 0.1, 0.2])

    def test_repeat_pad_leaves_long_clip(self):
        clip = AudioClip(np.zeros(100), 10)
        assert repeat_pad(clip, 0.5) is clip

    def test_crop(self):
        clip = AudioClip(np.linspace(-1, 1, 100), 10)
        assert len(crop(clip, 4.0)) == 40
        assert crop(clip, 20.0) is clip


class TestDecodeWav:
    """RIFF/WAVE decoding."""

    def test_one_second_pcm16_mono(self, wav_bytes):
        clip = decode_wav(wav_bytes(sample_rate=8000, seconds=1.0))
        assert len(clip) == 8000
        assert clip.sample_rate == 8000

    def test_pcm_normalization(self):
        payload = struct.pack("<3h", 16384, -32768, 32767)
        data = (
            b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
            + b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, 8000, 16000, 2, 16)
            + b"data" + struct.pack("<I", len(payload)) + payload
        )
        clip = decode_wav(data)
        np.testing.assert_allclose(clip.samples, [0.5, -1.0, 32767 / 32768])

    def test_stereo_symmetric_downmix(self):
        frames = np.array([[0.5, -0.5]] * 4)
        clip = decode_wav(encode_wav(frames, 8000))
        np.testing.assert_array_equal(clip.samples, np.zeros(4))

    def test_stereo_mean_downmix(self):
        frames = np.array([[0.5, 0.25], [-0.5, 0.0]])
        clip = decode_wav(encode_wav(frames, 8000, encoding="float32"))
        np.testing.assert_allclose(clip.samples, [0.375, -0.25])

    def test_float32_roundtrip_is_exact_for_representable_values(self):
        samples = np.array([0.0, 0.5, -0.25, 1.0, -1.0])
        clip = decode_wav(encode_wav(samples, 16000, encoding="float32"))
        np.testing.assert_array_equal(clip.samples, samples)

    def test_float_values_clamped(self):
        payload = np.array([2.0, -3.0, np.nan, 0.5], dtype="<f4").tobytes()
        data = (
            b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
            + b"fmt " + struct.pack("<IHHIIHH", 16, 3, 1, 8000, 32000, 4, 32)
            + b"data" + struct.pack("<I", len(payload)) + payload
        )
        clip = decode_wav(data)
        assert np.all(np.isfinite(clip.samples))
        np.testing.assert_allclose(clip.samples, [1.0, -1.0, 0.0, 0.5])

    def test_rifx_magic_raises(self, wav_bytes):
        data = b"RIFX" + wav_bytes()[4:]
        with pytest.raises(MalformedContainerError):
            decode_wav(data)

    def test_missing_wave_form_raises(self, wav_bytes):
        data = wav_bytes()[:8] + b"AVI " + wav_bytes()[12:]
        with pytest.raises(MalformedContainerError):
            decode_wav(data)

    def test_too_short_raises(self):
        with pytest.raises(MalformedContainerError):
            decode_wav(b"RIFF")

    def test_empty_raises(self):
        with pytest.raises(MalformedContainerError):
            decode_wav(b"")

    def test_missing_data_chunk_raises(self, wav_bytes):
        header_and_fmt = wav_bytes()[:36]
        with pytest.raises(MalformedContainerError, match="data"):
            decode_wav(header_and_fmt)

    def test_compressed_format_unsupported(self, wav_bytes):
        data = bytearray(wav_bytes())
        struct.pack_into("<H", data, 20, 0x0002)  # MS ADPCM
        with pytest.raises(UnsupportedEncodingError):
            decode_wav(bytes(data))

    def test_24_bit_pcm_unsupported(self, wav_bytes):
        data = bytearray(wav_bytes())
        struct.pack_into("<H", data, 34, 24)
        with pytest.raises(UnsupportedEncodingError):
            decode_wav(bytes(data))

    def test_more_than_two_channels_unsupported(self, wav_bytes):
        data = bytearray(wav_bytes())
        struct.pack_into("<H", data, 22, 6)
        with pytest.raises(UnsupportedEncodingError):
            decode_wav(bytes(data))

    def test_unknown_chunks_are_skipped(self, wav_bytes):
        raw = wav_bytes(seconds=0.1)
        junk = b"LIST" + struct.pack("<I", 3) + b"abc" + b"\x00"
        data = raw[:12] + junk + raw[12:]
        assert len(decode_wav(data)) == 800

    def test_output_bounded(self, rng):
        samples = rng.uniform(-1, 1, 4000)
        clip = decode_wav(encode_wav(samples, 4000))
        assert np.max(np.abs(clip.samples)) <= 1.0

    def test_read_wav_uses_file_stem(self, tmp_dir, wav_bytes):
        path = tmp_dir / "cough-01.wav"
        path.write_bytes(wav_bytes())
        assert read_wav(path).source_id == "cough-01"


class TestResample:
    """Polyphase resampling."""

    def test_identity_when_rates_match(self, sine_clip):
        clip = sine_clip(sample_rate=8000)
        out = resample(clip, 8000)
        np.testing.assert_array_equal(out.samples, clip.samples)
        assert out.sample_rate == 8000

    def test_dc_preserved(self):
        clip = AudioClip(np.full(8000, 0.7), 8000)
        out = resample(clip, 4000)
        assert out.sample_rate == 4000
        np.testing.assert_allclose(out.samples[200:-200], 0.7, atol=1e-3)

    def test_duration_within_one_sample(self):
        for source, target in [(8000, 4000), (48000, 32000), (44100, 8000), (4000, 8000), (16000, 48000)]:
            clip = AudioClip(np.zeros(12345), source)
            out = resample(clip, target)
            assert abs(len(out) - 12345 * target / source) <= 1

    def test_sine_peak_48k_to_32k(self, sine_clip):
        out = resample(sine_clip(freq=440.0, sample_rate=48000), 32000)
        assert abs(_peak_hz(out.samples, 32000) - 440.0) <= 32000 / len(out)

    def test_roundtrip_preserves_peak(self, sine_clip):
        clip = sine_clip(freq=1000.0, sample_rate=8000)
        back = resample(resample(clip, 4000), 8000)
        assert abs(_peak_hz(back.samples, 8000) - 1000.0) <= 8000 / len(back)

    def test_output_bounded(self, sine_clip):
        out = resample(sine_clip(amplitude=1.0, sample_rate=44100), 8000)
        assert np.max(np.abs(out.samples)) <= 1.0

    def test_invalid_target_raises(self, sine_clip):
        with pytest.raises(ValueError):
            resample(sine_clip(), 0)

    @pytest.mark.parametrize(
        "source, target, factors",
        [(44100, 48000, (160, 147)), (22050, 32000, (640, 441)), (44100, 8000, (80, 441)), (16000, 4000, (1, 4))],
    )
    def test_common_rates_use_exact_factors(self, source, target, factors):
        assert polyphase_factors(source, target) == factors

    @pytest.mark.parametrize("source, target", [(44100, 48000), (22050, 32000), (11025, 8000)])
    def test_non_anchor_rates_keep_pitch(self, sine_clip, source, target):
        out = resample(sine_clip(freq=700.0, sample_rate=source), target)
        assert len(out) == target
        assert abs(_peak_hz(out.samples, target) - 700.0) <= target / len(out)


class TestResampleOddRates:
    """Header rates whose reduced ratio is huge still get a bounded filter."""

    @pytest.mark.parametrize("source, target", [(1_000_003, 48000), (1009, 48000), (4_294_967_291, 4000), (7919, 8000)])
    def test_factors_bounded(self, source, target):
        up, down = polyphase_factors(source, target)
        assert 1 <= up <= MAX_POLYPHASE + 1
        assert 1 <= down <= MAX_POLYPHASE
        assert _lowpass(up, down).size < 100_000

    def test_prime_rate_downsample(self, sine_clip):
        clip = sine_clip(freq=1000.0, sample_rate=1_000_003, seconds=0.2)
        out = resample(clip, 48000)
        assert out.sample_rate == 48000
        assert abs(len(out) - len(clip) * 48000 / 1_000_003) <= 1
        assert abs(_peak_hz(out.samples, 48000) - 1000.0) <= 48000 / len(out)

    def test_prime_rate_upsample(self, sine_clip):
        clip = sine_clip(freq=200.0, sample_rate=1009, seconds=1.0)
        out = resample(clip, 48000)
        assert abs(len(out) - len(clip) * 48000 / 1009) <= 1
        assert abs(_peak_hz(out.samples, 48000) - 200.0) <= 48000 / len(out)

    def test_prime_header_rate_decodes_and_routes(self, wav_bytes):
        clip = decode_wav(wav_bytes(sample_rate=1_000_003, seconds=0.05))
        case = route(clip.sample_rate)
        out = resample(clip, case.stage1_rate)
        assert out.sample_rate == case.stage1_rate
        assert np.all(np.isfinite(out.samples))


class TestRouting:
    """Closest-anchor routing and the case table."""

    @pytest.mark.parametrize(
        ("rate", "expected"),
        [
            (4000, CaseId.CASE_4K),
            (8000, CaseId.CASE_8K),
            (48000, CaseId.CASE_48K),
            (44100, CaseId.CASE_48K),
            (16000, CaseId.CASE_8K),
            (6000, CaseId.CASE_8K),
            (1, CaseId.CASE_4K),
            (28000, CaseId.CASE_48K),
            (192000, CaseId.CASE_48K),
        ],
    )
    def test_route(self, rate, expected):
        assert route(rate).case_id == expected

    def test_tie_goes_to_higher_anchor(self):
        assert route(6000).case_id == CaseId.CASE_8K
        assert route(28000).case_id == CaseId.CASE_48K

    def test_nonpositive_rate_raises(self):
        with pytest.raises(ValueError):
            route(0)

    def test_case_4k(self):
        case = CASES[CaseId.CASE_4K]
        assert (case.stage1_rate, case.stage1_mel_bins) == (4000, 256)
        assert (case.stage2_rate, case.stage2_mel_bins) == (8000, 128)
        assert case.stage2_tap == StageTap.CONV_BLOCK6_GEM
        assert case.stage2_wavegram is False
        assert case.embedding_dims == (64, 128)

    def test_case_8k(self):
        case = CASES[CaseId.CASE_8K]
        assert (case.stage1_rate, case.stage1_mel_bins) == (8000, 128)
        assert (case.stage2_rate, case.stage2_mel_bins) == (8000, 128)
        assert case.stage2_tap == StageTap.EMBEDDING_LAYER
        assert case.stage2_wavegram is False
        assert case.embedding_dims == (64, 64)

    def test_case_48k(self):
        case = CASES[CaseId.CASE_48K]
        assert (case.stage1_rate, case.stage1_mel_bins) == (48000, 128)
        assert (case.stage2_rate, case.stage2_mel_bins) == (32000, 128)
        assert case.stage2_tap == StageTap.EMBEDDING_LAYER
        assert case.stage2_wavegram is True

    def test_format_routes_exact(self):
        assert format_routes() == ROUTES_TABLE
