"""
MiniCNN14: the stage-2 audio-pattern backbone, with an optional Wavegram front end.

Six conv blocks (16, 32, 64, 128, 128, 128 channels), each two conv3x3+BN+ReLU
layers followed by 2x2 average pooling. Two embedding taps are exposed:

* CONV_BLOCK6_GEM: GeM over the block-6 feature map (128-d)
* EMBEDDING_LAYER: global average of the block-6 map through fc 128 -> 64 + ReLU (64-d)

A tag head on the embedding layer drives the synthetic pretraining task.
"""

from __future__ import annotations

import numpy as np

from src.audio.clip import AudioClip
from src.audio.routing import StageTap
from src.constants import CONV_BLOCK6_DIM, EMBEDDING_LAYER_DIM
from src.errors import CoughScreenError
from src.features.logmel import LogMelSpectrogram
from src.models.inputs import spec_batch, waveform_batch
from src.nn import functional as F
from src.nn.layers import DEFAULT_DTYPE, BatchNorm, Conv1d, ConvBnRelu, GeM, Linear, Module, Sequential
from src.nn.tensor import ShapeMismatchError, Tensor, no_grad

BLOCK_WIDTHS = (16, 32, 64, 128, 128, CONV_BLOCK6_DIM)
WAVEGRAM_CHANNELS = 32
NUM_PROXY_TAGS = 4


class ConvBlock(Module):
    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator, dtype: type = DEFAULT_DTYPE):
        super().__init__()
        self.conv1 = ConvBnRelu(in_channels, out_channels, rng=rng, dtype=dtype)
        self.conv2 = ConvBnRelu(out_channels, out_channels, rng=rng, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return F.pool2x2(self.conv2(self.conv1(x)))


class WavegramFrontEnd(Module):
    """
    Learned time-frequency map from the raw waveform.

    conv1d k11/5 -> 3 x [conv1d k3/4 + BN + ReLU], 32 channels throughout.
    The output is average-pooled onto the Log-Mel frame grid and each of
    the 32 channels is repeated to fill the mel axis.
    """

    def __init__(self, mel_bins: int, rng: np.random.Generator, dtype: type = DEFAULT_DTYPE):
        super().__init__()
        if mel_bins % WAVEGRAM_CHANNELS:
            raise ShapeMismatchError(f"mel_bins {mel_bins} must be a multiple of {WAVEGRAM_CHANNELS}")
        self.mel_bins = mel_bins
        self.pre_conv = Conv1d(1, WAVEGRAM_CHANNELS, 11, stride=5, padding=5, rng=rng, dtype=dtype)
        self.convs = Sequential(
            *(Conv1d(WAVEGRAM_CHANNELS, WAVEGRAM_CHANNELS, 3, stride=4, padding=1, rng=rng, dtype=dtype) for _ in range(3))
        )
        self.norms = Sequential(*(BatchNorm(WAVEGRAM_CHANNELS, dtype=dtype) for _ in range(3)))

    def forward(self, waveform: Tensor, n_frames: int) -> Tensor:
        """(N, 1, samples) -> (N, 1, mel_bins, n_frames)."""
        x = self.pre_conv(waveform)
        for conv, norm in zip(self.convs, self.norms, strict=True):
            x = F.relu(norm(conv(x)))
        x = F.adaptive_avg_pool1d(x, n_frames)
        n = x.shape[0]
        x = x.reshape(n, 1, WAVEGRAM_CHANNELS, n_frames)
        return F.repeat(x, self.mel_bins // WAVEGRAM_CHANNELS, axis=2)

    def output_frames(self, samples: int) -> int:
        """Time steps produced by the conv stack before alignment."""
        length = (samples - 1) // 5 + 1
        for _ in range(3):
            length = (length - 1) // 4 + 1
        return length


class MiniCNN14(Module):
    def __init__(
        self,
        mel_bins: int = 128,
        wavegram: bool = False,
        num_tags: int = NUM_PROXY_TAGS,
        rng: np.random.Generator | None = None,
        dtype: type = DEFAULT_DTYPE,
    ):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.dtype = dtype
        self.mel_bins = mel_bins
        self.wavegram_enabled = wavegram
        if wavegram:
            self.wavegram = WavegramFrontEnd(mel_bins, rng, dtype)
        blocks = []
        in_channels = 2 if wavegram else 1
        for width in BLOCK_WIDTHS:
            blocks.append(ConvBlock(in_channels, width, rng, dtype))
            in_channels = width
        self.blocks = Sequential(*blocks)
        self.gem = GeM(dtype=dtype)
        self.fc1 = Linear(CONV_BLOCK6_DIM, EMBEDDING_LAYER_DIM, rng=rng, dtype=dtype)
        self.fc_tags = Linear(EMBEDDING_LAYER_DIM, num_tags, rng=rng, dtype=dtype)

    # --- graph pieces ---

    def conv_block6(self, x: Tensor, waveform: Tensor | None = None) -> Tensor:
        """Block-6 feature map for (N, 1, mels, frames) input (+ waveform in Wavegram mode)."""
        if (waveform is not None) != self.wavegram_enabled:
            expected = "requires" if self.wavegram_enabled else "does not take"
            raise TapMismatchError(f"this backbone {expected} a 32 kHz waveform")
        if waveform is not None:
            x = F.concat([x, self.wavegram(waveform, x.shape[3])], axis=1)
        return self.blocks(x)

    def embedding(self, block6: Tensor) -> Tensor:
        return F.relu(self.fc1(block6.mean(axis=(2, 3))))

    def embed(self, x: Tensor, waveform: Tensor | None, tap: StageTap) -> Tensor:
        block6 = self.conv_block6(x, waveform)
        if tap == StageTap.CONV_BLOCK6_GEM:
            return self.gem(block6)
        return self.embedding(block6)

    def tag_logits(self, x: Tensor, waveform: Tensor | None = None) -> Tensor:
        return self.fc_tags(self.embedding(self.conv_block6(x, waveform)))

    def forward(self, x: Tensor, waveform: Tensor | None = None) -> Tensor:
        return self.tag_logits(x, waveform)

    # --- input assembly ---

    def prepare(
        self, specs: list[LogMelSpectrogram], waveforms: list[AudioClip] | None = None
    ) -> tuple[Tensor, Tensor | None]:
        x = Tensor(spec_batch(specs, 1, self.dtype))
        wave = Tensor(waveform_batch(waveforms, self.dtype)) if waveforms else None
        return x, wave


def cnn14_forward(
    model: MiniCNN14,
    spec: LogMelSpectrogram,
    wavegram_in: AudioClip | None,
    tap: StageTap,
) -> np.ndarray:
    """Inference on one clip: the embedding at ``tap``."""
    model.eval()
    with no_grad():
        x, wave = model.prepare([spec], [wavegram_in] if wavegram_in is not None else None)
        out = model.embed(x, wave, tap)
    return out.data[0].copy()


class TapMismatchError(CoughScreenError):
    """Raised when Wavegram input presence disagrees with the routed case."""

    pass
