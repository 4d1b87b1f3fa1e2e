"""
k-fold cross-validation of the two-stage pipeline.

The manifest is partitioned by routed case; every case gets its own
pretrained stage-2 backbone and its own stratified fold plan. Each fold
trains stage 1 and the fusion head on the other folds and scores the
held-out clips. Fold results are merged in fold order, so a thread-pooled
run reports exactly what a sequential run does.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from src.audio.routing import CaseId
from src.config import CoughScreenConfig
from src.models.checkpoint import CHECKPOINT_SUFFIX, checkpoint_crc, save_checkpoint
from src.models.cnn14 import MiniCNN14
from src.models.cough_model import CoughModel
from src.nn import functional as F
from src.pipeline.folds import FoldPlan, kfold_split
from src.pipeline.manifest import Manifest
from src.pipeline.metrics import auc_from_arrays, mean_std
from src.pipeline.training import (
    FeatureSet,
    derive_seed,
    extract_embeddings,
    fusion_probabilities,
    load_feature_sets,
    pretrain_case_cnn14,
    train_fusion,
    train_stage1,
)
from src.utils.logging import get_logger

logger = get_logger("cv")


class Prediction(BaseModel):
    uuid: str
    probability: float
    stage1_probability: float
    label: int
    case_id: str
    fold: int


class FoldResult(BaseModel):
    case_id: str
    fold: int
    n: int
    auc: float
    stage1_auc: float
    checkpoint_crc: str


class CaseSummary(BaseModel):
    n: int
    proxy_auc: float
    mean_auc: float
    std_auc: float
    mean_stage1_auc: float
    std_stage1_auc: float
    folds: list[FoldResult]


class CrossValidationReport(BaseModel):
    per_fold: list[float]
    mean_auc: float
    std_auc: float
    n: int
    cases: dict[str, CaseSummary]
    fold_plans: dict[str, dict[str, int]]
    predictions: list[Prediction]

    def summary(self) -> dict[str, object]:
        """The headline metrics without per-clip detail."""
        return self.model_dump(include={"per_fold", "mean_auc", "std_auc", "n", "cases"})


def _shuffled_labels(manifest: Manifest, seed: int) -> dict[str, int]:
    uuids = manifest.uuids
    labels = np.array([manifest.get(u).label for u in uuids])
    permuted = np.random.default_rng(derive_seed(seed, 99)).permutation(labels)
    return {u: int(label) for u, label in zip(uuids, permuted, strict=True)}


def _run_fold(
    features: FeatureSet,
    plan: FoldPlan,
    fold: int,
    cnn14: MiniCNN14,
    config: CoughScreenConfig,
    seed: int,
    checkpoint_dir: Path | None,
) -> tuple[FoldResult, list[Prediction]]:
    case = features.case
    train_set = features.subset(plan.train_uuids(fold))
    test_set = features.subset(plan.fold(fold))
    fold_seed = derive_seed(seed, fold)

    stage1 = train_stage1(
        train_set,
        config.training.with_seed(derive_seed(fold_seed, 1)),
        config.augment.policy(),
    )
    fusion = train_fusion(
        extract_embeddings(train_set, stage1.model, cnn14),
        train_set.labels,
        config.fusion.train_config(derive_seed(fold_seed, 2)),
        e2_dim=case.tap_dim,
    )

    test_table = extract_embeddings(test_set, stage1.model, cnn14)
    probabilities = fusion_probabilities(fusion, test_table)
    stage1_probabilities = F.sigmoid(test_table.stage1_logits)
    labels = test_set.labels.astype(int)

    model = CoughModel(case=case, effnet=stage1.model, cnn14=cnn14, fusion=fusion, seed=fold_seed)
    if checkpoint_dir is not None:
        crc = save_checkpoint(model, checkpoint_dir / f"{case.case_id.value}-fold{fold}{CHECKPOINT_SUFFIX}")
    else:
        crc = checkpoint_crc(model)

    result = FoldResult(
        case_id=case.case_id.value,
        fold=fold,
        n=len(test_set),
        auc=auc_from_arrays(probabilities, labels),
        stage1_auc=auc_from_arrays(stage1_probabilities, labels),
        checkpoint_crc=f"{crc:08x}",
    )
    predictions = [
        Prediction(
            uuid=uuid,
            probability=float(p),
            stage1_probability=float(p1),
            label=int(y),
            case_id=case.case_id.value,
            fold=fold,
        )
        for uuid, p, p1, y in zip(test_set.uuids, probabilities, stage1_probabilities, labels, strict=True)
    ]
    logger.info("fold_done", case=result.case_id, fold=fold, auc=round(result.auc, 4), stage1_auc=round(result.stage1_auc, 4))
    return result, predictions


def cross_validate(
    manifest: Manifest,
    config: CoughScreenConfig,
    seed: int = 42,
    shuffle_labels: bool = False,
    checkpoint_dir: Path | None = None,
) -> CrossValidationReport:
    """Run k-fold CV per routed case and pool predictions across cases fold by fold."""
    k = config.cv.folds
    if shuffle_labels:
        manifest = manifest.with_labels(_shuffled_labels(manifest, seed))
    if checkpoint_dir is not None:
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    feature_sets = load_feature_sets(manifest, config.dsp, config.cv.max_workers)
    cases: dict[str, CaseSummary] = {}
    plans: dict[str, dict[str, int]] = {}
    predictions: list[Prediction] = []

    for case_index, case_id in enumerate(CaseId):
        if case_id not in feature_sets:
            continue
        features = feature_sets[case_id]
        case_seed = derive_seed(seed, case_index)
        plan = kfold_split(manifest.subset(set(features.uuids)), k, case_seed)
        cnn14, proxy_score = pretrain_case_cnn14(features.case, config, case_seed)

        run = partial(
            _run_fold, features, plan, cnn14=cnn14, config=config, seed=case_seed, checkpoint_dir=checkpoint_dir
        )

        if config.cv.max_workers > 1:
            with ThreadPoolExecutor(max_workers=config.cv.max_workers) as pool:
                outcomes = list(pool.map(run, range(k)))
        else:
            outcomes = [run(fold) for fold in range(k)]

        fold_results = [result for result, _ in outcomes]
        for _, fold_predictions in outcomes:
            predictions.extend(fold_predictions)
        mean_auc, std_auc = mean_std([r.auc for r in fold_results])
        mean_s1, std_s1 = mean_std([r.stage1_auc for r in fold_results])
        cases[case_id.value] = CaseSummary(
            n=len(features),
            proxy_auc=proxy_score,
            mean_auc=mean_auc,
            std_auc=std_auc,
            mean_stage1_auc=mean_s1,
            std_stage1_auc=std_s1,
            folds=fold_results,
        )
        plans[case_id.value] = plan.assignments
        logger.info("case_done", case=case_id.value, mean_auc=round(mean_auc, 4), std_auc=round(std_auc, 4))

    per_fold = []
    for fold in range(k):
        held_out = [p for p in predictions if p.fold == fold]
        per_fold.append(auc_from_arrays([p.probability for p in held_out], [p.label for p in held_out]))
    mean_auc, std_auc = mean_std(per_fold)
    predictions.sort(key=lambda p: p.uuid)
    return CrossValidationReport(
        per_fold=per_fold,
        mean_auc=mean_auc,
        std_auc=std_auc,
        n=len(predictions),
        cases=cases,
        fold_plans=plans,
        predictions=predictions,
    )
