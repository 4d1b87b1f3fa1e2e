"""Training, cross-validation, evaluation and scoring."""

from src.features.featurizer import AugmentationLeakError
from src.pipeline.cv import CrossValidationReport, FoldResult, Prediction, cross_validate
from src.pipeline.folds import FoldPlan, TooFewSamplesError, kfold_split
from src.pipeline.manifest import Manifest, ManifestError, ManifestRow, load_manifest, write_manifest
from src.pipeline.metrics import SingleClassError, auc, auc_from_arrays
from src.pipeline.scoring import EvaluationReport, ModelNotLoadedError, Scorer, ScoreResponse, evaluate_manifest
from src.pipeline.training import (
    EmbeddingTable,
    EmptyTrainSetError,
    FeatureSet,
    extract_embeddings,
    fit_case_model,
    load_feature_set,
    load_feature_sets,
    pretrain_case_cnn14,
    pretrain_proxy,
    proxy_auc,
    train_fusion,
    train_models,
    train_stage1,
)

__all__ = [
    "AugmentationLeakError",
    "CrossValidationReport",
    "EmbeddingTable",
    "EmptyTrainSetError",
    "EvaluationReport",
    "FeatureSet",
    "FoldPlan",
    "FoldResult",
    "Manifest",
    "ManifestError",
    "ManifestRow",
    "ModelNotLoadedError",
    "Prediction",
    "ScoreResponse",
    "Scorer",
    "SingleClassError",
    "TooFewSamplesError",
    "auc",
    "auc_from_arrays",
    "cross_validate",
    "evaluate_manifest",
    "extract_embeddings",
    "fit_case_model",
    "kfold_split",
    "load_feature_set",
    "load_feature_sets",
    "load_manifest",
    "pretrain_case_cnn14",
    "pretrain_proxy",
    "proxy_auc",
    "train_fusion",
    "train_models",
    "train_stage1",
    "write_manifest",
]
