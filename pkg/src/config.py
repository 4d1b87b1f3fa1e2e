"""Configuration management for CoughScreen: pydantic-settings + TOML/JSON."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource

from src.constants import (
    DB_FLOOR,
    DEFAULT_CONFIG_FILE,
    DEFAULT_FMIN_HZ,
    DEFAULT_HOST,
    DEFAULT_PORT,
    DEFAULT_THRESHOLD,
    MAX_BODY_BYTES,
    POWER_AMIN,
)
from src.features.augment import SpecAugmentPolicy
from src.features.stft import StftConfig, stft_config_for
from src.nn.optim import TrainConfig


class _Section(BaseSettings):
    """Config section where ``COUGHSCREEN_<SECTION>_*`` env vars beat file values."""

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return env_settings, init_settings, dotenv_settings, file_secret_settings


class DspConfig(_Section):
    mel_scale: Literal["htk", "slaney"] = "htk"
    fmin: float = DEFAULT_FMIN_HZ
    db_floor: float = DB_FLOOR
    amin: float = POWER_AMIN
    low_rate_n_fft: int = 1024
    low_rate_hop: int = 256
    high_rate_n_fft: int = 2048
    high_rate_hop: int = 512
    min_seconds: float = 0.5
    max_seconds: float = 4.0

    model_config = {"env_prefix": "COUGHSCREEN_DSP_"}

    @field_validator("min_seconds", "max_seconds")
    @classmethod
    def validate_seconds(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("clip duration bounds must be positive")
        return v

    def stft_for(self, sample_rate: int) -> StftConfig:
        return stft_config_for(
            sample_rate,
            low=(self.low_rate_n_fft, self.low_rate_hop),
            high=(self.high_rate_n_fft, self.high_rate_hop),
        )


class AugmentConfig(_Section):
    enabled: bool = True
    num_freq_masks: int = 2
    max_freq_width: int = 16
    num_time_masks: int = 2
    max_time_width: int = 24
    fill: float = DB_FLOOR

    model_config = {"env_prefix": "COUGHSCREEN_AUGMENT_"}

    def policy(self) -> SpecAugmentPolicy | None:
        if not self.enabled:
            return None
        return SpecAugmentPolicy(
            num_freq_masks=self.num_freq_masks,
            max_freq_width=self.max_freq_width,
            num_time_masks=self.num_time_masks,
            max_time_width=self.max_time_width,
            fill=self.fill,
        )


class TrainingConfig(TrainConfig, _Section):
    model_config = {"env_prefix": "COUGHSCREEN_TRAINING_"}

    def with_seed(self, seed: int) -> TrainConfig:
        return TrainConfig(**{**self.model_dump(), "seed": seed})


class PretrainConfig(_Section):
    clips: int = 512
    heldout_clips: int = 128
    epochs: int = 10
    batch_size: int = 16
    lr_max: float = 1e-3
    lr_min: float = 1e-5
    clip_seconds: float = 1.0

    model_config = {"env_prefix": "COUGHSCREEN_PRETRAIN_"}

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            lr_max=self.lr_max, lr_min=self.lr_min, batch_size=self.batch_size, epochs=self.epochs, seed=seed
        )


class FusionConfig(_Section):
    epochs: int = 30
    batch_size: int = 16
    lr_max: float = 1e-2
    lr_min: float = 1e-4

    model_config = {"env_prefix": "COUGHSCREEN_FUSION_"}

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            lr_max=self.lr_max, lr_min=self.lr_min, batch_size=self.batch_size, epochs=self.epochs, seed=seed
        )


class CrossValidationConfig(_Section):
    folds: int = 5
    max_workers: int = 1

    model_config = {"env_prefix": "COUGHSCREEN_CV_"}

    @field_validator("folds")
    @classmethod
    def validate_folds(cls, v: int) -> int:
        if v < 2:
            raise ValueError("cross-validation needs at least 2 folds")
        return v

    @field_validator("max_workers")
    @classmethod
    def validate_workers(cls, v: int) -> int:
        if v < 1:
            raise ValueError("max_workers must be >= 1")
        return v


class ServingConfig(_Section):
    host: str = DEFAULT_HOST
    port: int = DEFAULT_PORT
    threshold: float = DEFAULT_THRESHOLD
    max_body_bytes: int = MAX_BODY_BYTES

    model_config = {"env_prefix": "COUGHSCREEN_SERVING_"}

    @field_validator("host")
    @classmethod
    def validate_host(cls, v: str) -> str:
        if v == "0.0.0.0":
            raise ValueError("Binding to 0.0.0.0 is not allowed; the scoring service is local-only.")
        return v

    @field_validator("threshold")
    @classmethod
    def validate_threshold(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("threshold must be within [0, 1]")
        return v


class LoggingConfig(_Section):
    level: str = "INFO"
    format: Literal["json", "text"] = "json"

    model_config = {"env_prefix": "COUGHSCREEN_LOGGING_"}


class CoughScreenConfig(BaseSettings):
    """Root configuration for CoughScreen. Loads from TOML/JSON + env vars."""

    dsp: DspConfig = Field(default_factory=DspConfig)
    augment: AugmentConfig = Field(default_factory=AugmentConfig)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    pretrain: PretrainConfig = Field(default_factory=PretrainConfig)
    fusion: FusionConfig = Field(default_factory=FusionConfig)
    cv: CrossValidationConfig = Field(default_factory=CrossValidationConfig)
    serving: ServingConfig = Field(default_factory=ServingConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    model_config = {"env_prefix": "COUGHSCREEN_"}


def load_config(config_path: Path | None = None) -> CoughScreenConfig:
    """
    Load configuration with env var overrides.

    Priority (highest to lowest):
    1. Environment variables (COUGHSCREEN_<SECTION>_<KEY>)
    2. ``config_path`` (JSON or TOML, by suffix)
    3. Default config (config/default.toml)
    """
    merged: dict[str, Any] = {}

    if DEFAULT_CONFIG_FILE.exists():
        merged = _read_file(DEFAULT_CONFIG_FILE)

    if config_path is not None:
        merged = _deep_merge(merged, _read_file(Path(config_path)))

    return CoughScreenConfig(
        dsp=DspConfig(**merged.get("dsp", {})),
        augment=AugmentConfig(**merged.get("augment", {})),
        training=TrainingConfig(**merged.get("training", {})),
        pretrain=PretrainConfig(**merged.get("pretrain", {})),
        fusion=FusionConfig(**merged.get("fusion", {})),
        cv=CrossValidationConfig(**merged.get("cv", {})),
        serving=ServingConfig(**merged.get("serving", {})),
        logging=LoggingConfig(**merged.get("logging", {})),
    )


def _read_file(path: Path) -> dict[str, Any]:
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
    else:
        import tomli

        with open(path, "rb") as f:
            data = tomli.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top level must be a table/object")
    return data


def _deep_merge(base: dict, override: dict) -> dict:
    """Deep merge two dicts. Override values take precedence."""
    result = base.copy()
    for key, value in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = _deep_merge(result[key], value)
        else:
            result[key] = value
    return result
