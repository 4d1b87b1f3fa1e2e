"""
MiniEffNetV2: the stage-1 visual backbone.

stem conv3x3/2 (16 ch) -> three fused-conv blocks (16, 32, 64 ch, the first
conv of each strided) -> GeM pool -> 64-d embedding -> linear logit.
"""

from __future__ import annotations

import numpy as np

from src.constants import EMBEDDING1_DIM
from src.features.logmel import LogMelSpectrogram
from src.models.inputs import spec_batch
from src.nn.layers import DEFAULT_DTYPE, ConvBnRelu, GeM, Linear, Module, Sequential
from src.nn.tensor import Tensor, no_grad

STEM_CHANNELS = 16
BLOCK_WIDTHS = (16, 32, EMBEDDING1_DIM)
MIN_FRAMES = 32


class FusedConvBlock(Module):
    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator, dtype: type = DEFAULT_DTYPE):
        super().__init__()
        self.expand = ConvBnRelu(in_channels, out_channels, stride=2, rng=rng, dtype=dtype)
        self.project = ConvBnRelu(out_channels, out_channels, stride=1, rng=rng, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return self.project(self.expand(x))


class MiniEffNetV2(Module):
    def __init__(self, rng: np.random.Generator | None = None, dtype: type = DEFAULT_DTYPE):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.dtype = dtype
        self.stem = ConvBnRelu(1, STEM_CHANNELS, stride=2, rng=rng, dtype=dtype)
        blocks = []
        in_channels = STEM_CHANNELS
        for width in BLOCK_WIDTHS:
            blocks.append(FusedConvBlock(in_channels, width, rng, dtype))
            in_channels = width
        self.blocks = Sequential(*blocks)
        self.gem = GeM(dtype=dtype)
        self.head = Linear(EMBEDDING1_DIM, 1, rng=rng, dtype=dtype)

    @property
    def embedding_dim(self) -> int:
        return EMBEDDING1_DIM

    def embed(self, x: Tensor) -> Tensor:
        """(N, 1, mels, frames) -> (N, 64) GeM embedding."""
        return self.gem(self.blocks(self.stem(x)))

    def forward(self, x: Tensor) -> tuple[Tensor, Tensor]:
        """Return (logits (N,), embeddings (N, 64))."""
        embedding = self.embed(x)
        logits = self.head(embedding)
        return logits.reshape(logits.shape[0]), embedding

    def prepare(self, specs: list[LogMelSpectrogram]) -> Tensor:
        return Tensor(spec_batch(specs, MIN_FRAMES, self.dtype))


def effnet_forward(model: MiniEffNetV2, spec: LogMelSpectrogram) -> tuple[float, np.ndarray]:
    """Inference on one spectrogram: (logit, embedding1)."""
    model.eval()
    with no_grad():
        logits, embedding = model(model.prepare([spec]))
    return float(logits.data[0]), embedding.data[0].copy()

