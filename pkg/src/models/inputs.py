"""Batch assembly: spectrograms and waveforms to network input arrays."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from src.audio.clip import AudioClip
from src.constants import DB_INPUT_CENTER, DB_INPUT_SCALE
from src.errors import CoughScreenError
from src.features.logmel import LogMelSpectrogram


def _tile_columns(values: np.ndarray, n_frames: int) -> np.ndarray:
    """Repeat the column sequence until it is ``n_frames`` long."""
    reps = -(-n_frames // values.shape[1])
    return np.tile(values, (1, reps))[:, :n_frames]


def spec_batch(specs: Sequence[LogMelSpectrogram], min_frames: int = 1, dtype: type = np.float32) -> np.ndarray:
    """
    Stack spectrograms into (N, 1, mel_bins, frames), normalized to roughly [-1, 1].

    Shorter spectrograms are tiled in time up to the longest one (and at
    least ``min_frames``).
    """
    if not specs:
        raise InputTooSmallError("empty batch")
    bins = {s.values.shape[0] for s in specs}
    if len(bins) != 1:
        raise InputTooSmallError(f"mixed mel bin counts in one batch: {sorted(bins)}")
    if any(s.values.size == 0 for s in specs):
        raise InputTooSmallError("spectrogram has no cells")
    frames = max(min_frames, max(s.n_frames for s in specs))
    stacked = np.stack([_tile_columns(s.values, frames) for s in specs])[:, None]
    return ((stacked - DB_INPUT_CENTER) / DB_INPUT_SCALE).astype(dtype)


def waveform_batch(clips: Sequence[AudioClip], dtype: type = np.float32) -> np.ndarray:
    """Stack waveforms into (N, 1, samples), repeat-padding to the longest clip."""
    if not clips:
        raise InputTooSmallError("empty batch")
    length = max(len(c) for c in clips)
    return np.stack([np.resize(c.samples, length) for c in clips])[:, None].astype(dtype)


class InputTooSmallError(CoughScreenError):
    """Raised when a spectrogram cannot feed a backbone even after padding."""

    pass
