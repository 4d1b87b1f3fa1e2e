"""
Per-case feature extraction.

A ``CaseFeaturizer`` turns one decoded clip into everything both backbones
of its routed case consume: the stage-1 Log-Mel at the case's stage-1 rate,
the stage-2 Log-Mel at the stage-2 rate, and (for the Wavegram case) the
stage-2-rate waveform itself. Training code may add SpecAugment afterwards;
evaluation code asserts it never did.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from src.audio.clip import AudioClip, crop, repeat_pad
from src.audio.resample import resample
from src.audio.routing import CaseConfig
from src.errors import CoughScreenError
from src.features.logmel import LogMelSpectrogram, log_mel

if TYPE_CHECKING:
    from src.config import DspConfig


@dataclass(frozen=True)
class CaseFeatures:
    stage1: LogMelSpectrogram
    stage2: LogMelSpectrogram
    waveform: AudioClip | None = None
    source_id: str = ""

    def assert_clean(self) -> None:
        """Raise if any spectrogram carries training-time masking."""
        if self.stage1.augmented or self.stage2.augmented:
            raise AugmentationLeakError(f"augmented features reached an evaluation path ({self.source_id!r})")


class CaseFeaturizer:
    """Featurize clips for one routing case."""

    def __init__(self, case: CaseConfig, dsp: DspConfig):
        self.case = case
        self.dsp = dsp

    def prepare(self, clip: AudioClip) -> AudioClip:
        """Repeat-pad short clips to the minimum duration, crop long ones to the maximum."""
        return crop(repeat_pad(clip, self.dsp.min_seconds), self.dsp.max_seconds)

    def spectrogram(self, clip: AudioClip, rate: int, mel_bins: int) -> LogMelSpectrogram:
        at_rate = resample(clip, rate)
        return log_mel(
            at_rate,
            mel_bins,
            self.dsp.stft_for(rate),
            fmin=self.dsp.fmin,
            mel_scale=self.dsp.mel_scale,
            amin=self.dsp.amin,
            floor=self.dsp.db_floor,
        )

    def featurize_stage2(self, clip: AudioClip) -> tuple[LogMelSpectrogram, AudioClip | None]:
        """Stage-2 Log-Mel plus the Wavegram waveform when the case needs one."""
        at_rate = resample(clip, self.case.stage2_rate)
        spec = self.spectrogram(at_rate, self.case.stage2_rate, self.case.stage2_mel_bins)
        return spec, (at_rate if self.case.stage2_wavegram else None)

    def featurize(self, clip: AudioClip) -> CaseFeatures:
        prepared = self.prepare(clip)
        stage1 = self.spectrogram(prepared, self.case.stage1_rate, self.case.stage1_mel_bins)
        stage2, waveform = self.featurize_stage2(prepared)
        return CaseFeatures(stage1=stage1, stage2=stage2, waveform=waveform, source_id=clip.source_id)


class AugmentationLeakError(CoughScreenError):
    """Raised when SpecAugment-masked features reach an evaluation path."""

    pass
