"""Backbones, fusion head and checkpoint persistence."""

from src.models.checkpoint import (
    BadMagicError,
    CheckpointError,
    CrcMismatchError,
    TensorShapeMismatchError,
    VersionUnsupportedError,
    load_backbone,
    load_checkpoint,
    read_container,
    save_backbone,
    save_checkpoint,
    write_container,
)
from src.models.cnn14 import MiniCNN14, TapMismatchError, WavegramFrontEnd, cnn14_forward
from src.models.cough_model import CasePrediction, CoughModel, build_model
from src.models.effnet import MiniEffNetV2, effnet_forward
from src.models.fusion import DimMismatchError, FusionHead, fuse_forward
from src.models.inputs import InputTooSmallError

__all__ = [
    "BadMagicError",
    "CasePrediction",
    "CheckpointError",
    "CoughModel",
    "CrcMismatchError",
    "DimMismatchError",
    "FusionHead",
    "InputTooSmallError",
    "MiniCNN14",
    "MiniEffNetV2",
    "TapMismatchError",
    "TensorShapeMismatchError",
    "VersionUnsupportedError",
    "WavegramFrontEnd",
    "build_model",
    "cnn14_forward",
    "effnet_forward",
    "fuse_forward",
    "load_backbone",
    "load_checkpoint",
    "read_container",
    "save_backbone",
    "save_checkpoint",
    "write_container",
]
