"""The per-case model bundle: both backbones plus the fusion head."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from src.audio.routing import CaseConfig
from src.features.featurizer import CaseFeatures
from src.models.cnn14 import MiniCNN14, cnn14_forward
from src.models.effnet import MiniEffNetV2, effnet_forward
from src.models.fusion import FusionHead, fuse_forward
from src.nn.functional import sigmoid


@dataclass
class CasePrediction:
    probability: float
    logit: float
    stage1_logit: float


@dataclass
class CoughModel:
    case: CaseConfig
    effnet: MiniEffNetV2
    cnn14: MiniCNN14
    fusion: FusionHead
    seed: int = 0

    @property
    def version(self) -> str:
        """Case id plus the CRC32 of the serialized checkpoint."""
        from src.models.checkpoint import checkpoint_crc

        return f"{self.case.case_id.value}-{checkpoint_crc(self):08x}"

    def embeddings(self, features: CaseFeatures) -> tuple[float, np.ndarray, np.ndarray]:
        """(stage-1 logit, e1, e2) for one clean feature set."""
        features.assert_clean()
        stage1_logit, e1 = effnet_forward(self.effnet, features.stage1)
        e2 = cnn14_forward(self.cnn14, features.stage2, features.waveform, self.case.stage2_tap)
        return stage1_logit, e1, e2

    def predict(self, features: CaseFeatures) -> CasePrediction:
        stage1_logit, e1, e2 = self.embeddings(features)
        self.fusion.eval()
        logit = fuse_forward(self.fusion, e1, e2)
        return CasePrediction(probability=float(sigmoid(logit)), logit=logit, stage1_logit=stage1_logit)


def build_model(case: CaseConfig, seed: int) -> CoughModel:
    """Freshly initialized model for ``case``; each component gets its own seeded stream."""
    effnet_seq, cnn14_seq, fusion_seq = np.random.SeedSequence(seed).spawn(3)
    return CoughModel(
        case=case,
        effnet=MiniEffNetV2(rng=np.random.default_rng(effnet_seq)),
        cnn14=MiniCNN14(
            mel_bins=case.stage2_mel_bins,
            wavegram=case.stage2_wavegram,
            rng=np.random.default_rng(cnn14_seq),
        ),
        fusion=FusionHead(e2_dim=case.tap_dim, rng=np.random.default_rng(fusion_seq)),
        seed=seed,
    )
