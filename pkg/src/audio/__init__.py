"""CoughScreen audio I/O — WAV codec, resampling, and sampling-rate routing."""

from src.audio.clip import AudioClip, InvalidClipError, crop, repeat_pad
from src.audio.resample import resample
from src.audio.routing import CASES, CaseConfig, CaseId, StageTap, format_routes, route
from src.audio.wav import (
    MalformedContainerError,
    UnsupportedEncodingError,
    decode_wav,
    encode_wav,
    read_wav,
)

__all__ = [
    "AudioClip",
    "CASES",
    "CaseConfig",
    "CaseId",
    "InvalidClipError",
    "MalformedContainerError",
    "StageTap",
    "UnsupportedEncodingError",
    "crop",
    "decode_wav",
    "encode_wav",
    "format_routes",
    "read_wav",
    "repeat_pad",
    "resample",
    "route",
]
