"""
Checkpoint container.

Layout (all integers little-endian):

    b"FCV1" | u32 format_version | u32 config length | config JSON (UTF-8)
    | records: u16 name length, name, u8 ndim, u32 dims..., f32 payload
    | u32 CRC32 of every preceding byte

The same container carries model checkpoints and feature dumps; only the
config JSON and tensor names differ.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path
from typing import Any

import numpy as np

from src.audio.routing import CASES, CaseId
from src.errors import CoughScreenError
from src.models.cnn14 import MiniCNN14
from src.models.cough_model import CoughModel, build_model
from src.nn.tensor import ShapeMismatchError
from src.utils.logging import get_logger

logger = get_logger("checkpoint")

MAGIC = b"FCV1"
FORMAT_VERSION = 1
SUPPORTED_VERSIONS = frozenset({FORMAT_VERSION})
CHECKPOINT_SUFFIX = ".fcv"

_HEADER = struct.Struct("<4sII")
_CRC = struct.Struct("<I")


# ──────────────────────── generic container ────────────────────────


def write_container(config: dict[str, Any], tensors: dict[str, np.ndarray]) -> bytes:
    """Serialize a config object and named float tensors."""
    config_bytes = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, len(config_bytes)), config_bytes]
    for name, array in tensors.items():
        encoded = name.encode("utf-8")
        data = np.ascontiguousarray(array, dtype="<f4")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", data.ndim))
        parts.append(struct.pack(f"<{data.ndim}I", *data.shape))
        parts.append(data.tobytes())
    body = b"".join(parts)
    return body + _CRC.pack(zlib.crc32(body))


def read_container(blob: bytes) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    """Parse a container, checking magic, CRC and version in that order."""
    if len(blob) < _HEADER.size + _CRC.size or blob[:4] != MAGIC:
        raise BadMagicError(f"not a checkpoint (magic {blob[:4]!r})")
    body, (stored_crc,) = blob[: -_CRC.size], _CRC.unpack(blob[-_CRC.size :])
    actual_crc = zlib.crc32(body)
    if actual_crc != stored_crc:
        raise CrcMismatchError(f"stored CRC {stored_crc:08x}, computed {actual_crc:08x}")
    _, version, config_len = _HEADER.unpack_from(body, 0)
    if version not in SUPPORTED_VERSIONS:
        raise VersionUnsupportedError(f"format version {version} (supported: {sorted(SUPPORTED_VERSIONS)})")

    offset = _HEADER.size
    try:
        config = json.loads(body[offset : offset + config_len].decode("utf-8"))
        offset += config_len
        tensors: dict[str, np.ndarray] = {}
        while offset < len(body):
            (name_len,) = struct.unpack_from("<H", body, offset)
            offset += 2
            name = body[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (ndim,) = struct.unpack_from("<B", body, offset)
            offset += 1
            dims = struct.unpack_from(f"<{ndim}I", body, offset)
            offset += 4 * ndim
            count = int(np.prod(dims, dtype=np.int64))
            if offset + 4 * count > len(body):
                raise CheckpointError(f"tensor {name!r} runs past the end of the file")
            tensors[name] = np.frombuffer(body, dtype="<f4", count=count, offset=offset).reshape(dims).astype(np.float32)
            offset += 4 * count
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"corrupt checkpoint body: {e}") from e
    return config, tensors


# ──────────────────────── model checkpoints ────────────────────────


def model_config(model: CoughModel) -> dict[str, Any]:
    case = model.case
    return {
        "case": case.case_id.value,
        "mel_bins_stage1": case.stage1_mel_bins,
        "mel_bins_stage2": case.stage2_mel_bins,
        "tap": case.stage2_tap.value,
        "embedding_dims": list(case.embedding_dims),
        "seed": model.seed,
        "format_version": FORMAT_VERSION,
    }


def model_tensors(model: CoughModel) -> dict[str, np.ndarray]:
    tensors: dict[str, np.ndarray] = {}
    for prefix, module in (("effnet", model.effnet), ("cnn14", model.cnn14), ("fusion", model.fusion)):
        for name, array in module.state_dict().items():
            tensors[f"{prefix}.{name}"] = array
    return tensors


def serialize(model: CoughModel) -> bytes:
    return write_container(model_config(model), model_tensors(model))


def checkpoint_crc(model: CoughModel) -> int:
    return _CRC.unpack(serialize(model)[-_CRC.size :])[0]


def deserialize(blob: bytes) -> CoughModel:
    config, tensors = read_container(blob)
    try:
        case = CASES[CaseId(config["case"])]
        seed = int(config["seed"])
    except (KeyError, ValueError, TypeError) as e:
        raise CheckpointError(f"checkpoint config is missing or has a bad 'case'/'seed': {e}") from e
    if config.get("tap") != case.stage2_tap.value or list(config.get("embedding_dims", [])) != list(
        case.embedding_dims
    ):
        raise TensorShapeMismatchError(f"checkpoint config disagrees with routing case {case.case_id}")

    model = build_model(case, seed)
    expected = model_tensors(model)
    missing = sorted(set(expected) - set(tensors))
    unexpected = sorted(set(tensors) - set(expected))
    if missing or unexpected:
        raise TensorShapeMismatchError(f"tensor names differ: missing={missing} unexpected={unexpected}")
    for name, target in expected.items():
        if tensors[name].shape != target.shape:
            raise TensorShapeMismatchError(f"{name}: expected {target.shape}, got {tensors[name].shape}")
        np.copyto(target, tensors[name])

    model.cnn14.freeze()
    model.effnet.eval()
    model.fusion.eval()
    return model


def save_checkpoint(model: CoughModel, path: str | Path) -> int:
    """Write ``model`` to ``path``; returns the CRC32 stored in the file."""
    blob = serialize(model)
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(blob)
    crc = _CRC.unpack(blob[-_CRC.size :])[0]
    logger.info("checkpoint_saved", path=str(target), case=model.case.case_id.value, crc=f"{crc:08x}")
    return crc


def load_checkpoint(path: str | Path) -> CoughModel:
    target = Path(path)
    model = deserialize(target.read_bytes())
    logger.info("checkpoint_loaded", path=str(target), case=model.case.case_id.value)
    return model


# ──────────────────────── pretrained backbones ────────────────────────


def save_backbone(cnn14: MiniCNN14, case_id: CaseId, path: str | Path, proxy_auc: float | None = None) -> int:
    """Write a pretrained stage-2 backbone; returns the CRC32 stored in the file."""
    config = {
        "kind": "backbone",
        "case": case_id.value,
        "proxy_auc": proxy_auc,
        "format_version": FORMAT_VERSION,
    }
    blob = write_container(config, cnn14.state_dict())
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(blob)
    crc = _CRC.unpack(blob[-_CRC.size :])[0]
    logger.info("backbone_saved", path=str(target), case=case_id.value, crc=f"{crc:08x}")
    return crc


def load_backbone(path: str | Path) -> tuple[CaseId, MiniCNN14]:
    """Read a backbone written by :func:`save_backbone`; it comes back frozen."""
    config, tensors = read_container(Path(path).read_bytes())
    if config.get("kind") != "backbone":
        raise CheckpointError(f"{path}: not a backbone container (kind={config.get('kind')!r})")
    try:
        case = CASES[CaseId(config["case"])]
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"{path}: bad case in backbone config: {e}") from e
    cnn14 = MiniCNN14(mel_bins=case.stage2_mel_bins, wavegram=case.stage2_wavegram, rng=np.random.default_rng(0))
    try:
        cnn14.load_state_dict(tensors)
    except ShapeMismatchError as e:
        raise TensorShapeMismatchError(str(e)) from e
    cnn14.freeze()
    return case.case_id, cnn14


class CheckpointError(CoughScreenError):
    """Raised when a checkpoint cannot be parsed."""

    pass


class BadMagicError(CheckpointError):
    """Raised when the file does not start with the checkpoint magic."""

    pass


class CrcMismatchError(CheckpointError):
    """Raised when the trailing CRC32 does not match the contents."""

    pass


class VersionUnsupportedError(CheckpointError):
    """Raised for an unknown format version."""

    pass


class TensorShapeMismatchError(CheckpointError):
    """Raised when stored tensors do not fit the architecture named in the config."""

    pass
