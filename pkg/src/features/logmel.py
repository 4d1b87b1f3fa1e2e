"""Log-Mel spectrograms in dB with a fixed floor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.audio.clip import AudioClip
from src.constants import DB_FLOOR, DEFAULT_FMIN_HZ, POWER_AMIN
from src.features.mel import MelScale, mel_filterbank
from src.features.stft import StftConfig, stft


@dataclass(frozen=True)
class LogMelSpectrogram:
    """``values`` has shape (mel_bins, n_frames) in dB, every cell >= the floor."""

    values: np.ndarray
    mel_bins: int
    frame_rate: float
    source_rate: int
    augmented: bool = False

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.values.shape[0]), int(self.values.shape[1])


def power_to_db(power: np.ndarray, amin: float = POWER_AMIN, floor: float = DB_FLOOR) -> np.ndarray:
    """10*log10(max(S, amin)) clamped below at ``floor``; cells at or under ``amin`` land exactly on the floor."""
    db = np.maximum(10.0 * np.log10(np.maximum(power, amin)), floor)
    return np.where(power <= amin, max(10.0 * np.log10(amin), floor), db)


def log_mel(
    clip: AudioClip,
    n_mels: int,
    cfg: StftConfig,
    fmin: float = DEFAULT_FMIN_HZ,
    fmax: float | None = None,
    mel_scale: MelScale = "htk",
    amin: float = POWER_AMIN,
    floor: float = DB_FLOOR,
) -> LogMelSpectrogram:
    """Power spectrogram projected onto the mel bank, then converted to dB."""
    bank = mel_filterbank(
        clip.sample_rate,
        cfg.n_fft,
        n_mels,
        float(fmin),
        float(fmax if fmax is not None else clip.sample_rate / 2),
        mel_scale,
    )
    spectrum = stft(clip, cfg)
    power = spectrum.real**2 + spectrum.imag**2
    values = power_to_db(bank.weights @ power, amin, floor)
    return LogMelSpectrogram(
        values=values,
        mel_bins=n_mels,
        frame_rate=clip.sample_rate / cfg.hop,
        source_rate=clip.sample_rate,
    )
