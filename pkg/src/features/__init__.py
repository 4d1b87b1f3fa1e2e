"""Log-Mel feature extraction and SpecAugment."""

from src.features.augment import SpecAugmentPolicy, spec_augment
from src.features.featurizer import AugmentationLeakError, CaseFeatures, CaseFeaturizer
from src.features.logmel import LogMelSpectrogram, log_mel, power_to_db
from src.features.mel import InvalidBandError, MelFilterbank, hz_to_mel, mel_filterbank, mel_to_hz
from src.features.stft import ClipTooShortError, StftConfig, stft, stft_config_for

__all__ = [
    "AugmentationLeakError",
    "CaseFeatures",
    "CaseFeaturizer",
    "ClipTooShortError",
    "InvalidBandError",
    "LogMelSpectrogram",
    "MelFilterbank",
    "SpecAugmentPolicy",
    "StftConfig",
    "hz_to_mel",
    "log_mel",
    "mel_filterbank",
    "mel_to_hz",
    "power_to_db",
    "spec_augment",
    "stft",
    "stft_config_for",
]
