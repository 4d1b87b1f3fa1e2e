"""Mel scale conversions and triangular filterbanks."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from src.errors import CoughScreenError

MelScale = Literal["htk", "slaney"]

# Slaney: linear below 1 kHz, logarithmic above
_SLANEY_F_SP = 200.0 / 3
_SLANEY_MIN_LOG_HZ = 1000.0
_SLANEY_MIN_LOG_MEL = _SLANEY_MIN_LOG_HZ / _SLANEY_F_SP
_SLANEY_LOGSTEP = np.log(6.4) / 27.0


def hz_to_mel(hz: np.ndarray | float, scale: MelScale = "htk") -> np.ndarray:
    f = np.asarray(hz, dtype=np.float64)
    if scale == "htk":
        return 2595.0 * np.log10(1.0 + f / 700.0)
    linear = f / _SLANEY_F_SP
    logarithmic = _SLANEY_MIN_LOG_MEL + np.log(np.maximum(f, _SLANEY_MIN_LOG_HZ) / _SLANEY_MIN_LOG_HZ) / _SLANEY_LOGSTEP
    return np.where(f >= _SLANEY_MIN_LOG_HZ, logarithmic, linear)


def mel_to_hz(mel: np.ndarray | float, scale: MelScale = "htk") -> np.ndarray:
    m = np.asarray(mel, dtype=np.float64)
    if scale == "htk":
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    linear = m * _SLANEY_F_SP
    logarithmic = _SLANEY_MIN_LOG_HZ * np.exp(_SLANEY_LOGSTEP * (m - _SLANEY_MIN_LOG_MEL))
    return np.where(m >= _SLANEY_MIN_LOG_MEL, logarithmic, linear)


@dataclass(frozen=True)
class MelFilterbank:
    """Triangular filters, ``weights`` shape (n_mels, n_fft/2 + 1)."""

    weights: np.ndarray
    sample_rate: int
    fmin: float
    fmax: float
    scale: MelScale = "htk"

    @property
    def n_mels(self) -> int:
        return int(self.weights.shape[0])

    @property
    def n_fft(self) -> int:
        return 2 * (int(self.weights.shape[1]) - 1)


@lru_cache(maxsize=32)
def mel_filterbank(
    sample_rate: int,
    n_fft: int,
    n_mels: int,
    fmin: float,
    fmax: float,
    scale: MelScale = "htk",
) -> MelFilterbank:
    """
    Build ``n_mels`` unit-peak triangles whose edges are mel-uniform between fmin and fmax.

    A filter narrower than one FFT bin collapses onto the nearest bin, so
    every row keeps a positive entry.
    """
    n_bins = n_fft // 2 + 1
    if not 0 <= fmin < fmax <= sample_rate / 2:
        raise InvalidBandError(f"need 0 <= fmin < fmax <= {sample_rate / 2}, got fmin={fmin} fmax={fmax}")
    if not 1 <= n_mels <= n_bins:
        raise InvalidBandError(f"n_mels must be in [1, {n_bins}] for n_fft={n_fft}, got {n_mels}")

    bin_hz = np.arange(n_bins) * sample_rate / n_fft
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin, scale), hz_to_mel(fmax, scale), n_mels + 2), scale)
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (bin_hz[None, :] - lower) / (center - lower)
    falling = (upper - bin_hz[None, :]) / (upper - center)
    weights = np.maximum(0.0, np.minimum(rising, falling))

    for row in np.flatnonzero(weights.max(axis=1) <= 0.0):
        weights[row, int(np.argmin(np.abs(bin_hz - edges[row + 1])))] = 1.0

    weights.flags.writeable = False
    return MelFilterbank(weights=weights, sample_rate=sample_rate, fmin=float(fmin), fmax=float(fmax), scale=scale)


class InvalidBandError(CoughScreenError):
    """Raised when a filterbank's band or bin count is out of range."""

    pass
