"""Shared test fixtures for CoughScreen."""

import tempfile
from pathlib import Path

import numpy as np
import pytest
import structlog

from src.audio.clip import AudioClip
from src.audio.wav import encode_wav
from src.config import (
    AugmentConfig,
    CoughScreenConfig,
    CrossValidationConfig,
    FusionConfig,
    PretrainConfig,
    TrainingConfig,
)


def sine(freq: float, sample_rate: int, seconds: float = 1.0, amplitude: float = 0.5) -> np.ndarray:
    t = np.arange(int(round(seconds * sample_rate))) / sample_rate
    return amplitude * np.sin(2 * np.pi * freq * t)


@pytest.fixture
def tmp_dir():
    """Provide a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as d:
        yield Path(d)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def sine_clip():
    """Factory for sine-wave AudioClips."""

    def make(freq: float = 440.0, sample_rate: int = 8000, seconds: float = 1.0, amplitude: float = 0.5) -> AudioClip:
        return AudioClip(sine(freq, sample_rate, seconds, amplitude), sample_rate, f"sine-{freq:g}")

    return make


@pytest.fixture
def wav_bytes():
    """Factory for encoded WAV bytes of a sine wave."""

    def make(freq: float = 440.0, sample_rate: int = 8000, seconds: float = 1.0, encoding: str = "pcm16") -> bytes:
        return encode_wav(sine(freq, sample_rate, seconds), sample_rate, encoding)

    return make


@pytest.fixture
def tiny_config():
    """Full pipeline configuration shrunk to run in seconds."""
    return CoughScreenConfig(
        augment=AugmentConfig(enabled=True),
        training=TrainingConfig(epochs=1, batch_size=8),
        pretrain=PretrainConfig(clips=16, heldout_clips=8, epochs=1, batch_size=8, clip_seconds=0.5),
        fusion=FusionConfig(epochs=2, batch_size=8),
        cv=CrossValidationConfig(folds=2),
    )


@pytest.fixture(scope="session")
def case_models():
    """One freshly initialized (untrained) model per routing case."""
    from src.audio.routing import CASES
    from src.models import build_model

    return [build_model(case, seed=index) for index, case in enumerate(CASES.values())]


@pytest.fixture
def model_files(tmp_dir, case_models):
    """The ``case_models`` saved as checkpoints; returns their paths."""
    from src.models.checkpoint import save_checkpoint

    paths = []
    for model in case_models:
        path = tmp_dir / "models" / f"{model.case.case_id.value}.fcv"
        save_checkpoint(model, path)
        paths.append(path)
    return paths


@pytest.fixture(autouse=True)
def _reset_logging():
    """Drop logging configuration bound to a previous test's captured streams."""
    yield
    structlog.contextvars.clear_contextvars()
    structlog.reset_defaults()
