"""
Two-stage training.

Stage 1 trains MiniEffNetV2 on Log-Mel spectrograms with SpecAugment.
Stage 2's MiniCNN14 is pretrained on the synthetic tag corpus and frozen.
The fusion head is then fitted on the concatenated embeddings of both.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from src.audio.clip import AudioClip
from src.audio.routing import CaseConfig, CaseId, route
from src.audio.wav import read_wav
from src.config import CoughScreenConfig, DspConfig
from src.errors import CoughScreenError
from src.features.augment import SpecAugmentPolicy, spec_augment
from src.features.featurizer import CaseFeatures, CaseFeaturizer
from src.features.logmel import LogMelSpectrogram
from src.models.cnn14 import MiniCNN14
from src.models.cough_model import CoughModel
from src.models.effnet import MiniEffNetV2
from src.models.fusion import DimMismatchError, FusionHead
from src.nn import functional as F
from src.nn.optim import Adam, TrainConfig, cosine_lr
from src.nn.tensor import Tensor, no_grad
from src.pipeline.manifest import Manifest
from src.pipeline.metrics import SingleClassError, auc_from_arrays
from src.pipeline.synthetic import ProxyCorpus, proxy_corpus
from src.utils.logging import get_logger

logger = get_logger("training")


def derive_seed(seed: int, *path: int) -> int:
    """Independent 32-bit seed for the sub-task at ``path`` under ``seed``."""
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


# ──────────────────────── feature sets ────────────────────────


@dataclass
class FeatureSet:
    """The decoded and featurized rows of one routing case."""

    case: CaseConfig
    uuids: list[str]
    labels: np.ndarray
    features: list[CaseFeatures]

    def __len__(self) -> int:
        return len(self.uuids)

    def subset(self, uuids: Sequence[str]) -> FeatureSet:
        index = {uuid: i for i, uuid in enumerate(self.uuids)}
        picks = [index[u] for u in uuids]
        return FeatureSet(
            case=self.case,
            uuids=[self.uuids[i] for i in picks],
            labels=self.labels[picks].copy(),
            features=[self.features[i] for i in picks],
        )


def _parallel_map(fn: Callable, items: Sequence, max_workers: int) -> list:
    """Map in a thread pool; results come back in input order."""
    if max_workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, items))


def load_feature_sets(
    manifest: Manifest,
    dsp: DspConfig,
    max_workers: int = 1,
) -> dict[CaseId, FeatureSet]:
    """Decode every manifest row, route it by sampling rate and featurize it for its case."""
    clips: list[AudioClip] = _parallel_map(lambda row: read_wav(row.path), manifest.rows, max_workers)
    grouped: dict[CaseId, list[int]] = {}
    for i, clip in enumerate(clips):
        grouped.setdefault(route(clip.sample_rate).case_id, []).append(i)

    sets: dict[CaseId, FeatureSet] = {}
    for case_id, indices in grouped.items():
        case = route(clips[indices[0]].sample_rate)
        featurizer = CaseFeaturizer(case, dsp)
        feats = _parallel_map(lambda i: featurizer.featurize(clips[i]), indices, max_workers)
        sets[case_id] = FeatureSet(
            case=case,
            uuids=[manifest.rows[i].uuid for i in indices],
            labels=np.array([manifest.rows[i].label for i in indices], dtype=np.float64),
            features=feats,
        )
        logger.info("features_loaded", case=case_id.value, clips=len(indices))
    return sets


def load_feature_set(manifest: Manifest, case: CaseConfig, dsp: DspConfig, max_workers: int = 1) -> FeatureSet:
    """Feature set for the rows of ``manifest`` that route to ``case``."""
    sets = load_feature_sets(manifest, dsp, max_workers)
    if case.case_id not in sets:
        raise EmptyTrainSetError(f"no manifest rows route to {case.case_id}")
    return sets[case.case_id]


def _batches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    return [order[i : i + batch_size] for i in range(0, len(order), batch_size)]


# ──────────────────────── stage 1 ────────────────────────


@dataclass
class Stage1Result:
    model: MiniEffNetV2
    train_loss: list[float] = field(default_factory=list)
    eval_loss: list[float] = field(default_factory=list)


def stage1_loss(model: MiniEffNetV2, features: FeatureSet, batch_size: int = 16) -> float:
    """Mean eval-mode BCE of the stage-1 head over clean features."""
    model.eval()
    total = 0.0
    with no_grad():
        for batch in _batches(np.arange(len(features)), batch_size):
            specs = []
            for i in batch:
                features.features[i].assert_clean()
                specs.append(features.features[i].stage1)
            logits, _ = model(model.prepare(specs))
            total += F.bce_with_logits(logits, features.labels[batch]).item() * len(batch)
    return total / len(features)


def train_stage1(
    features: FeatureSet,
    cfg: TrainConfig,
    policy: SpecAugmentPolicy | None,
    eval_features: FeatureSet | None = None,
) -> Stage1Result:
    """
    Train a fresh MiniEffNetV2 on the stage-1 spectrograms of ``features``.

    SpecAugment (when ``policy`` is given) touches training batches only.
    With ``eval_features`` the clean eval loss is recorded before training
    and after every epoch.
    """
    if len(features) == 0:
        raise EmptyTrainSetError(f"no training clips for {features.case.case_id}")
    init_seq, shuffle_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    model = MiniEffNetV2(rng=np.random.default_rng(init_seq))
    rng = np.random.default_rng(shuffle_seq)
    if policy is not None and policy.is_identity:
        policy = None
    optimizer = Adam(model.trainable_parameters())
    result = Stage1Result(model=model)
    if eval_features is not None:
        result.eval_loss.append(stage1_loss(model, eval_features, cfg.batch_size))

    for epoch in range(cfg.epochs):
        lr = cosine_lr(epoch, cfg)
        model.train()
        epoch_loss = 0.0
        for batch in _batches(rng.permutation(len(features)), cfg.batch_size):
            specs: list[LogMelSpectrogram] = []
            for i in batch:
                spec = features.features[i].stage1
                specs.append(spec_augment(spec, policy, rng) if policy is not None else spec)
            logits, _ = model(model.prepare(specs))
            loss = F.bce_with_logits(logits, features.labels[batch])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step(lr)
            epoch_loss += loss.item() * len(batch)
        result.train_loss.append(epoch_loss / len(features))
        if eval_features is not None:
            result.eval_loss.append(stage1_loss(model, eval_features, cfg.batch_size))
        logger.debug("stage1_epoch", case=features.case.case_id.value, epoch=epoch, lr=lr, loss=result.train_loss[-1])

    model.eval()
    logger.info("stage1_trained", case=features.case.case_id.value, clips=len(features), loss=result.train_loss[-1])
    return result


# ──────────────────────── stage 2 proxy pretraining ────────────────────────


@dataclass
class ProxyFeatures:
    specs: list[LogMelSpectrogram]
    waveforms: list[AudioClip] | None
    tags: np.ndarray

    def __len__(self) -> int:
        return len(self.specs)


def featurize_proxy(corpus: ProxyCorpus, case: CaseConfig, dsp: DspConfig) -> ProxyFeatures:
    featurizer = CaseFeaturizer(case, dsp)
    specs: list[LogMelSpectrogram] = []
    waves: list[AudioClip] = []
    for clip in corpus.clips:
        spec, wave = featurizer.featurize_stage2(featurizer.prepare(clip))
        specs.append(spec)
        if wave is not None:
            waves.append(wave)
    return ProxyFeatures(specs=specs, waveforms=waves or None, tags=corpus.tags)


def _proxy_inputs(cnn14: MiniCNN14, data: ProxyFeatures, batch: np.ndarray) -> tuple[Tensor, Tensor | None]:
    waves = [data.waveforms[i] for i in batch] if data.waveforms is not None else None
    return cnn14.prepare([data.specs[i] for i in batch], waves)


def proxy_scores(cnn14: MiniCNN14, data: ProxyFeatures, batch_size: int = 16) -> np.ndarray:
    """(n_clips, n_tags) tag logits in eval mode."""
    cnn14.eval()
    rows = []
    with no_grad():
        for batch in _batches(np.arange(len(data)), batch_size):
            rows.append(cnn14.tag_logits(*_proxy_inputs(cnn14, data, batch)).data)
    return np.concatenate(rows, axis=0)


def proxy_auc(cnn14: MiniCNN14, data: ProxyFeatures, batch_size: int = 16) -> float:
    """Mean per-tag AUC; tags present in every clip or in none are skipped."""
    scores = proxy_scores(cnn14, data, batch_size)
    per_tag = []
    for j in range(data.tags.shape[1]):
        try:
            per_tag.append(auc_from_arrays(scores[:, j], data.tags[:, j].astype(int)))
        except SingleClassError:
            continue
    if not per_tag:
        raise SingleClassError("no proxy tag has both classes")
    return float(np.mean(per_tag))


def pretrain_proxy(cnn14: MiniCNN14, corpus: ProxyFeatures, cfg: TrainConfig, freeze: bool = True) -> MiniCNN14:
    """Multi-label BCE on the tag head, then freeze the backbone."""
    if len(corpus) == 0:
        raise EmptyTrainSetError("empty proxy corpus")
    rng = np.random.default_rng(cfg.seed)
    optimizer = Adam(cnn14.trainable_parameters())
    for epoch in range(cfg.epochs):
        lr = cosine_lr(epoch, cfg)
        cnn14.train()
        epoch_loss = 0.0
        for batch in _batches(rng.permutation(len(corpus)), cfg.batch_size):
            logits = cnn14.tag_logits(*_proxy_inputs(cnn14, corpus, batch))
            loss = F.bce_with_logits(logits, corpus.tags[batch])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step(lr)
            epoch_loss += loss.item() * len(batch)
        logger.debug("proxy_epoch", epoch=epoch, lr=lr, loss=epoch_loss / len(corpus))
    if freeze:
        cnn14.freeze()
    return cnn14


def pretrain_case_cnn14(case: CaseConfig, config: CoughScreenConfig, seed: int) -> tuple[MiniCNN14, float]:
    """Build, pretrain and freeze the stage-2 backbone for ``case``; returns it with its held-out proxy AUC."""
    init_seq, train_seq = np.random.SeedSequence([seed, 2]).spawn(2)
    cnn14 = MiniCNN14(
        mel_bins=case.stage2_mel_bins,
        wavegram=case.stage2_wavegram,
        rng=np.random.default_rng(init_seq),
    )
    pre = config.pretrain
    corpus_seed = int(train_seq.generate_state(1)[0])
    train = featurize_proxy(proxy_corpus(pre.clips, case.stage2_rate, pre.clip_seconds, corpus_seed), case, config.dsp)
    heldout = featurize_proxy(
        proxy_corpus(pre.heldout_clips, case.stage2_rate, pre.clip_seconds, corpus_seed + 1), case, config.dsp
    )
    pretrain_proxy(cnn14, train, pre.train_config(corpus_seed))
    score = proxy_auc(cnn14, heldout, pre.batch_size)
    logger.info("cnn14_pretrained", case=case.case_id.value, proxy_auc=round(score, 4))
    return cnn14, score


# ──────────────────────── embeddings and fusion ────────────────────────


@dataclass
class EmbeddingTable:
    uuids: list[str]
    e1: np.ndarray
    e2: np.ndarray
    stage1_logits: np.ndarray

    def __len__(self) -> int:
        return len(self.uuids)

    def concat(self) -> np.ndarray:
        return np.concatenate([self.e1, self.e2], axis=1)


def extract_embeddings(features: FeatureSet, effnet: MiniEffNetV2, cnn14: MiniCNN14) -> EmbeddingTable:
    """Per-clip (e1, e2) in eval mode; rows follow ``features.uuids``."""
    effnet.eval()
    cnn14.eval()
    e1_rows, e2_rows, logits = [], [], []
    tap = features.case.stage2_tap
    with no_grad():
        for item in features.features:
            item.assert_clean()
            logit, e1 = effnet(effnet.prepare([item.stage1]))
            x, wave = cnn14.prepare([item.stage2], [item.waveform] if item.waveform is not None else None)
            e1_rows.append(e1.data[0])
            e2_rows.append(cnn14.embed(x, wave, tap).data[0])
            logits.append(float(logit.data[0]))
    return EmbeddingTable(
        uuids=list(features.uuids),
        e1=np.array(e1_rows, dtype=np.float32).reshape(len(features), -1),
        e2=np.array(e2_rows, dtype=np.float32).reshape(len(features), -1),
        stage1_logits=np.array(logits, dtype=np.float64),
    )


def train_fusion(table: EmbeddingTable, labels: np.ndarray, cfg: TrainConfig, e2_dim: int | None = None) -> FusionHead:
    """Logistic regression of the fusion head on standardized concatenated embeddings."""
    if len(table) == 0:
        raise EmptyTrainSetError("empty embedding table")
    if e2_dim is not None and table.e2.shape[1] != e2_dim:
        raise DimMismatchError(f"embedding table has {table.e2.shape[1]}-d stage-2 rows, case expects {e2_dim}")
    if len(labels) != len(table):
        raise DimMismatchError(f"{len(labels)} labels for {len(table)} embeddings")
    init_seq, shuffle_seq = np.random.SeedSequence([cfg.seed, 3]).spawn(2)
    head = FusionHead(e2_dim=table.e2.shape[1], e1_dim=table.e1.shape[1], rng=np.random.default_rng(init_seq))
    head.fit_standardization(table.concat())
    rng = np.random.default_rng(shuffle_seq)
    optimizer = Adam(head.trainable_parameters())
    y = np.asarray(labels, dtype=np.float64)
    for epoch in range(cfg.epochs):
        lr = cosine_lr(epoch, cfg)
        for batch in _batches(rng.permutation(len(table)), cfg.batch_size):
            logits = head(Tensor(table.e1[batch]), Tensor(table.e2[batch]))
            loss = F.bce_with_logits(logits, y[batch])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step(lr)
    head.eval()
    return head


def fusion_probabilities(head: FusionHead, table: EmbeddingTable) -> np.ndarray:
    with no_grad():
        logits = head(Tensor(table.e1), Tensor(table.e2))
    return F.sigmoid(logits.data.astype(np.float64))


# ──────────────────────── full per-case fit ────────────────────────


def fit_case_model(
    features: FeatureSet,
    cnn14: MiniCNN14,
    config: CoughScreenConfig,
    seed: int,
) -> CoughModel:
    """Stage 1, embeddings, fusion: one deployable model for the case of ``features``."""
    stage1_seq, fusion_seq = np.random.SeedSequence([seed, 1]).spawn(2)
    stage1_cfg = config.training.with_seed(int(stage1_seq.generate_state(1)[0]))
    stage1 = train_stage1(features, stage1_cfg, config.augment.policy())
    table = extract_embeddings(features, stage1.model, cnn14)
    fusion = train_fusion(
        table,
        features.labels,
        config.fusion.train_config(int(fusion_seq.generate_state(1)[0])),
        e2_dim=features.case.tap_dim,
    )
    return CoughModel(case=features.case, effnet=stage1.model, cnn14=cnn14, fusion=fusion, seed=seed)


def train_models(
    manifest: Manifest,
    config: CoughScreenConfig,
    seed: int = 42,
    backbones: dict[CaseId, MiniCNN14] | None = None,
) -> list[CoughModel]:
    """
    Fit one deployable model per routed case on every row of ``manifest``.

    Cases without a supplied backbone get one pretrained on the proxy corpus
    with the same seed derivation cross-validation uses.
    """
    backbones = backbones or {}
    feature_sets = load_feature_sets(manifest, config.dsp, config.cv.max_workers)
    models = []
    for case_index, case_id in enumerate(CaseId):
        if case_id not in feature_sets:
            continue
        features = feature_sets[case_id]
        case_seed = derive_seed(seed, case_index)
        cnn14 = backbones.get(case_id)
        if cnn14 is None:
            cnn14, _ = pretrain_case_cnn14(features.case, config, case_seed)
        models.append(fit_case_model(features, cnn14, config, case_seed))
        logger.info("case_model_trained", case=case_id.value, clips=len(features))
    if not models:
        raise EmptyTrainSetError("manifest has no rows to train on")
    return models


class EmptyTrainSetError(CoughScreenError):
    """Raised when a training step receives no samples."""

    pass
