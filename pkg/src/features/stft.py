"""Short-time Fourier transform with a periodic Hann window."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal

from src.audio.clip import AudioClip
from src.errors import CoughScreenError

LOW_RATE_LIMIT_HZ = 8000


@dataclass(frozen=True)
class StftConfig:
    n_fft: int
    hop: int
    window: str = "hann"
    center: bool = True

    def __post_init__(self) -> None:
        if self.n_fft < 1 or self.n_fft & (self.n_fft - 1):
            raise ValueError(f"n_fft must be a power of two, got {self.n_fft}")
        if not 0 < self.hop <= self.n_fft:
            raise ValueError(f"hop must be in (0, n_fft], got {self.hop}")

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    def n_frames(self, length: int) -> int:
        if self.center:
            return 1 + length // self.hop
        return 1 + (length - self.n_fft) // self.hop


def stft_config_for(sample_rate: int, low: tuple[int, int] = (1024, 256), high: tuple[int, int] = (2048, 512)) -> StftConfig:
    """Per-rate STFT geometry: ``low`` (n_fft, hop) up to 8 kHz, ``high`` above."""
    n_fft, hop = low if sample_rate <= LOW_RATE_LIMIT_HZ else high
    return StftConfig(n_fft=n_fft, hop=hop)


@lru_cache(maxsize=16)
def _window(name: str, n_fft: int) -> np.ndarray:
    win = signal.get_window(name, n_fft, fftbins=True)
    win.flags.writeable = False
    return win


def stft(clip: AudioClip, cfg: StftConfig) -> np.ndarray:
    """
    One-sided complex spectrum, shape (n_fft/2 + 1, n_frames).

    With ``center`` the signal is reflect-padded by n_fft/2 on both sides so
    frame t is centred on sample t*hop, giving 1 + len // hop frames.
    """
    x = clip.samples
    if cfg.center:
        pad = cfg.n_fft // 2
        x = np.pad(x, pad, mode="reflect" if len(x) > 1 else "edge")
    elif len(x) < cfg.n_fft:
        raise ClipTooShortError(f"clip has {len(x)} samples, n_fft is {cfg.n_fft}")

    frames = sliding_window_view(x, cfg.n_fft)[:: cfg.hop]
    return np.fft.rfft(frames * _window(cfg.window, cfg.n_fft), axis=1).T


class ClipTooShortError(CoughScreenError):
    """Raised when an uncentred STFT is asked for a clip shorter than one window."""

    pass
