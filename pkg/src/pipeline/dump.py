"""Feature dumps in the checkpoint container format."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from src.audio.routing import CaseConfig
from src.features.featurizer import CaseFeatures
from src.models.checkpoint import FORMAT_VERSION, read_container, write_container

STAGE1_KEY = "stage1.logmel"
STAGE2_KEY = "stage2.logmel"
WAVEFORM_KEY = "stage2.waveform"


def dump_features(features: CaseFeatures, case: CaseConfig) -> bytes:
    config = {
        "kind": "features",
        "case": case.case_id.value,
        "source_id": features.source_id,
        "stage1_rate": features.stage1.source_rate,
        "stage2_rate": features.stage2.source_rate,
        "format_version": FORMAT_VERSION,
    }
    tensors = {STAGE1_KEY: features.stage1.values, STAGE2_KEY: features.stage2.values}
    if features.waveform is not None:
        tensors[WAVEFORM_KEY] = features.waveform.samples
    return write_container(config, tensors)


def write_feature_dump(features: CaseFeatures, case: CaseConfig, path: str | Path) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(dump_features(features, case))


def read_feature_dump(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    return read_container(Path(path).read_bytes())
