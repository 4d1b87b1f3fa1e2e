"""
RIFF/WAVE codec for CoughScreen.

Decoding accepts little-endian RIFF containers holding 16-bit PCM or
32-bit IEEE float, mono or stereo (including WAVE_FORMAT_EXTENSIBLE
headers whose sub-format is one of those two). Everything is downmixed
to mono and normalized to [-1, 1]. Encoding writes the same two
encodings and is used by the synthetic corpus generator and the tests.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from src.audio.clip import AudioClip
from src.errors import CoughScreenError
from src.utils.logging import get_logger

logger = get_logger("wav")

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

PCM16_SCALE = 32768.0
ENCODINGS = ("pcm16", "float32")


def decode_wav(data: bytes, source_id: str = "") -> AudioClip:
    """Decode a WAV byte string into a mono AudioClip."""
    if len(data) < 12:
        raise MalformedContainerError("container shorter than a RIFF header")
    if data[0:4] != b"RIFF":
        raise MalformedContainerError(f"bad magic {data[0:4]!r}, expected b'RIFF'")
    if data[8:12] != b"WAVE":
        raise MalformedContainerError(f"bad form type {data[8:12]!r}, expected b'WAVE'")

    fmt: tuple[int, int, int, int] | None = None
    payload: bytes | None = None
    offset = 12
    while offset + 8 <= len(data):
        chunk_id = data[offset : offset + 4]
        (size,) = struct.unpack_from("<I", data, offset + 4)
        body_start = offset + 8
        body_end = body_start + size
        if body_end > len(data):
            if chunk_id != b"data":
                raise MalformedContainerError(f"chunk {chunk_id!r} overruns the container")
            logger.warning("wav_data_truncated", declared=size, available=len(data) - body_start)
            body_end = len(data)
        body = data[body_start:body_end]

        if chunk_id == b"fmt ":
            fmt = _parse_fmt(body)
        elif chunk_id == b"data":
            payload = body
        offset = body_end + (size & 1)

    if fmt is None:
        raise MalformedContainerError("missing 'fmt ' chunk")
    if payload is None:
        raise MalformedContainerError("missing 'data' chunk")

    audio_format, channels, sample_rate, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedEncodingError(f"{channels} channels (only mono/stereo)")
    if sample_rate <= 0:
        raise MalformedContainerError("sample rate must be positive")

    if audio_format == WAVE_FORMAT_PCM and bits == 16:
        frame_bytes = 2 * channels
        usable = len(payload) - len(payload) % frame_bytes
        raw = np.frombuffer(payload[:usable], dtype="<i2").astype(np.float64) / PCM16_SCALE
    elif audio_format == WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        frame_bytes = 4 * channels
        usable = len(payload) - len(payload) % frame_bytes
        raw = np.frombuffer(payload[:usable], dtype="<f4").astype(np.float64)
        raw = np.clip(np.nan_to_num(raw, nan=0.0, posinf=1.0, neginf=-1.0), -1.0, 1.0)
    else:
        raise UnsupportedEncodingError(f"format 0x{audio_format:04x} with {bits}-bit samples")

    frames = raw.reshape(-1, channels)
    mono = frames[:, 0] if channels == 1 else frames.mean(axis=1)
    return AudioClip(mono, sample_rate, source_id)


def _parse_fmt(body: bytes) -> tuple[int, int, int, int]:
    """Return (format tag, channels, sample rate, bits per sample)."""
    if len(body) < 16:
        raise MalformedContainerError("'fmt ' chunk shorter than 16 bytes")
    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = struct.unpack_from(
        "<HHIIHH", body, 0
    )
    if audio_format == WAVE_FORMAT_EXTENSIBLE:
        if len(body) < 26:
            raise MalformedContainerError("extensible 'fmt ' chunk without sub-format")
        # First two bytes of the sub-format GUID carry the actual format tag
        (audio_format,) = struct.unpack_from("<H", body, 24)
    return audio_format, channels, sample_rate, bits


def encode_wav(samples: np.ndarray, sample_rate: int, encoding: str = "pcm16") -> bytes:
    """
    Encode samples as a canonical 44-byte-header WAV file.

    ``samples`` is 1-D (mono) or 2-D (frames, channels); values are clamped to [-1, 1].
    """
    if encoding not in ENCODINGS:
        raise UnsupportedEncodingError(f"cannot encode {encoding!r}")
    frames = np.asarray(samples, dtype=np.float64)
    if frames.ndim == 1:
        frames = frames[:, None]
    channels = frames.shape[1]
    frames = np.clip(frames, -1.0, 1.0)

    if encoding == "pcm16":
        format_tag, bits = WAVE_FORMAT_PCM, 16
        quantized = np.clip(np.round(frames * PCM16_SCALE), -32768, 32767)
        payload = quantized.astype("<i2").tobytes()
    else:
        format_tag, bits = WAVE_FORMAT_IEEE_FLOAT, 32
        payload = frames.astype("<f4").tobytes()

    block_align = channels * bits // 8
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    fmt = b"fmt " + struct.pack(
        "<IHHIIHH", 16, format_tag, channels, sample_rate, sample_rate * block_align,
        block_align, bits,
    )
    data = b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        data += b"\x00"
    return header + fmt + data


def read_wav(path: str | Path) -> AudioClip:
    """Read and decode a WAV file from disk."""
    file_path = Path(path)
    return decode_wav(file_path.read_bytes(), source_id=file_path.stem)


class MalformedContainerError(CoughScreenError):
    """Raised when the bytes are not a well-formed RIFF/WAVE container."""

    pass


class UnsupportedEncodingError(CoughScreenError):
    """Raised for sample encodings other than 16-bit PCM and 32-bit float."""

    pass
