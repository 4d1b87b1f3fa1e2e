"""SpecAugment frequency and time masking."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from src.constants import DB_FLOOR
from src.features.logmel import LogMelSpectrogram


@dataclass(frozen=True)
class SpecAugmentPolicy:
    num_freq_masks: int = 2
    max_freq_width: int = 16
    num_time_masks: int = 2
    max_time_width: int = 24
    fill: float = DB_FLOOR

    def __post_init__(self) -> None:
        for name in ("num_freq_masks", "max_freq_width", "num_time_masks", "max_time_width"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def is_identity(self) -> bool:
        no_freq = self.num_freq_masks == 0 or self.max_freq_width == 0
        no_time = self.num_time_masks == 0 or self.max_time_width == 0
        return no_freq and no_time


def _draw_span(rng: np.random.Generator, max_width: int, size: int) -> tuple[int, int]:
    width = min(int(rng.integers(0, max_width + 1)), size)
    start = int(rng.integers(0, size - width + 1))
    return start, width


def spec_augment(spec: LogMelSpectrogram, policy: SpecAugmentPolicy, rng: np.random.Generator) -> LogMelSpectrogram:
    """
    Return a masked copy of ``spec``.

    Each frequency mask draws a width in [0, F] and a start in [0, n_mels - width]
    and fills those rows; time masks do the same on columns. Frequency masks
    are drawn before time masks. Widths larger than the axis are clamped.
    """
    values = spec.values.copy()
    n_mels, n_frames = values.shape
    for _ in range(policy.num_freq_masks):
        start, width = _draw_span(rng, policy.max_freq_width, n_mels)
        values[start : start + width, :] = policy.fill
    for _ in range(policy.num_time_masks):
        start, width = _draw_span(rng, policy.max_time_width, n_frames)
        values[:, start : start + width] = policy.fill
    return replace(spec, values=values, augmented=True)
