"""AudioClip — a decoded mono waveform and its sample rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.errors import CoughScreenError


@dataclass(frozen=True)
class AudioClip:
    """
    Mono waveform in [-1, 1] with its sample rate.

    Construction validates the invariants: non-empty, finite, |x| <= 1, rate > 0.
    The samples array is made read-only so a clip can be shared across threads.
    """

    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidClipError("samples must be a non-empty 1-D array")
        if self.sample_rate <= 0:
            raise InvalidClipError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise InvalidClipError("samples contain NaN or Inf")
        if np.max(np.abs(samples)) > 1.0:
            raise InvalidClipError("samples exceed [-1, 1]")
        if samples.flags.writeable:
            samples = samples.copy()
            samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self) -> int:
        return int(self.samples.size)


def repeat_pad(clip: AudioClip, min_seconds: float) -> AudioClip:
    """Tile the waveform until it lasts at least ``min_seconds``."""
    target = math.ceil(min_seconds * clip.sample_rate)
    if len(clip) >= target:
        return clip
    return AudioClip(np.resize(clip.samples, target), clip.sample_rate, clip.source_id)


def crop(clip: AudioClip, max_seconds: float) -> AudioClip:
    """Keep the first ``max_seconds`` of the waveform."""
    limit = max(1, math.floor(max_seconds * clip.sample_rate))
    if len(clip) <= limit:
        return clip
    return AudioClip(clip.samples[:limit], clip.sample_rate, clip.source_id)


class InvalidClipError(CoughScreenError):
    """Raised when a waveform violates the AudioClip invariants."""

    pass
