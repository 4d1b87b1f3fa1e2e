"""
One-shot scoring shared by the CLI and the HTTP service.

A ``Scorer`` holds one loaded model per routing case. ``score_bytes`` runs
decode -> route -> featurize -> both backbones -> fusion for a WAV body and
never mutates the models, so a single instance serves concurrent callers.
"""

from __future__ import annotations

import time
from collections.abc import Iterable
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field

from src.audio.clip import AudioClip
from src.audio.routing import CaseId, route
from src.audio.wav import decode_wav, read_wav
from src.config import DspConfig
from src.constants import DEFAULT_THRESHOLD
from src.errors import CoughScreenError
from src.features.featurizer import CaseFeaturizer
from src.models.checkpoint import load_checkpoint
from src.models.cough_model import CoughModel
from src.pipeline.manifest import Manifest
from src.pipeline.metrics import SingleClassError, auc_from_arrays
from src.utils.logging import get_logger

logger = get_logger("scoring")


class ScoreResponse(BaseModel):
    probability: float = Field(ge=0.0, le=1.0)
    label: Literal["positive", "negative"]
    case_id: str
    model_version: str
    latency_ms: float


class Scorer:
    def __init__(self, models: Iterable[CoughModel], dsp: DspConfig, threshold: float = DEFAULT_THRESHOLD):
        self.models: dict[CaseId, CoughModel] = {}
        for model in models:
            if model.case.case_id in self.models:
                raise ValueError(f"two models given for {model.case.case_id}")
            self.models[model.case.case_id] = model
        self.versions = {case_id: model.version for case_id, model in self.models.items()}
        self.featurizers = {case_id: CaseFeaturizer(model.case, dsp) for case_id, model in self.models.items()}
        self.threshold = threshold

    @classmethod
    def from_paths(cls, paths: Iterable[str | Path], dsp: DspConfig, threshold: float = DEFAULT_THRESHOLD) -> Scorer:
        return cls([load_checkpoint(p) for p in paths], dsp, threshold)

    @property
    def cases(self) -> list[str]:
        return sorted(case_id.value for case_id in self.models)

    def score_clip(self, clip: AudioClip, started: float | None = None) -> ScoreResponse:
        started = time.perf_counter() if started is None else started
        case = route(clip.sample_rate)
        model = self.models.get(case.case_id)
        if model is None:
            raise ModelNotLoadedError(f"no model loaded for {case.case_id.value} (loaded: {self.cases})")
        features = self.featurizers[case.case_id].featurize(clip)
        probability = model.predict(features).probability
        response = ScoreResponse(
            probability=probability,
            label="positive" if probability >= self.threshold else "negative",
            case_id=case.case_id.value,
            model_version=self.versions[case.case_id],
            latency_ms=(time.perf_counter() - started) * 1000.0,
        )
        logger.info(
            "score_request",
            case=response.case_id,
            probability=round(probability, 6),
            latency_ms=round(response.latency_ms, 2),
        )
        return response

    def score_bytes(self, data: bytes, source_id: str = "") -> ScoreResponse:
        started = time.perf_counter()
        return self.score_clip(decode_wav(data, source_id), started)


class EvaluationReport(BaseModel):
    n: int
    auc: float | None
    cases: dict[str, float | None]
    predictions: dict[str, float]


def evaluate_manifest(scorer: Scorer, manifest: Manifest) -> EvaluationReport:
    """Score every labelled row and report pooled and per-case AUC (None where a class is missing)."""
    scores: dict[str, float] = {}
    by_case: dict[str, list[str]] = {}
    for row in manifest:
        response = scorer.score_clip(read_wav(row.path))
        scores[row.uuid] = response.probability
        by_case.setdefault(response.case_id, []).append(row.uuid)

    def _auc(uuids: list[str]) -> float | None:
        try:
            return auc_from_arrays([scores[u] for u in uuids], [manifest.get(u).label for u in uuids])
        except SingleClassError:
            return None

    return EvaluationReport(
        n=len(scores),
        auc=_auc(list(scores)),
        cases={case_id: _auc(uuids) for case_id, uuids in sorted(by_case.items())},
        predictions=scores,
    )


class ModelNotLoadedError(CoughScreenError):
    """Raised when no loaded model serves the routed case."""

    pass
