"""Fusion head: one affine map over the concatenated stage-1 and stage-2 embeddings."""

from __future__ import annotations

import numpy as np

from src.constants import EMBEDDING1_DIM
from src.errors import CoughScreenError
from src.nn import functional as F
from src.nn.layers import DEFAULT_DTYPE, Linear, Module
from src.nn.tensor import Tensor, no_grad

STD_FLOOR = 1e-6


class FusionHead(Module):
    """
    logit = w . standardize(concat(e1, e2)) + b.

    The standardization buffers are fitted on training embeddings and start
    as the identity (mean 0, scale 1).
    """

    def __init__(
        self,
        e2_dim: int,
        e1_dim: int = EMBEDDING1_DIM,
        rng: np.random.Generator | None = None,
        dtype: type = DEFAULT_DTYPE,
    ):
        super().__init__()
        self.e1_dim = e1_dim
        self.e2_dim = e2_dim
        self.fc = Linear(e1_dim + e2_dim, 1, rng=rng, dtype=dtype)
        self.register_buffer("input_mean", np.zeros(e1_dim + e2_dim, dtype=dtype))
        self.register_buffer("input_scale", np.ones(e1_dim + e2_dim, dtype=dtype))

    @property
    def input_dim(self) -> int:
        return self.e1_dim + self.e2_dim

    def fit_standardization(self, features: np.ndarray) -> None:
        """Set the input shift/scale from an (N, e1+e2) matrix of training embeddings."""
        if features.ndim != 2 or features.shape[1] != self.input_dim:
            raise DimMismatchError(f"expected (N, {self.input_dim}) embeddings, got {features.shape}")
        std = features.std(axis=0)
        self.input_mean[...] = features.mean(axis=0)
        self.input_scale[...] = np.where(std > STD_FLOOR, std, 1.0)

    def concat_inputs(self, e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
        e1 = np.atleast_2d(e1)
        e2 = np.atleast_2d(e2)
        if e1.shape[1] != self.e1_dim or e2.shape[1] != self.e2_dim or e1.shape[0] != e2.shape[0]:
            raise DimMismatchError(
                f"fusion expects ({self.e1_dim}, {self.e2_dim})-d embeddings, got {e1.shape} and {e2.shape}"
            )
        return np.concatenate([e1, e2], axis=1)

    def forward(self, e1: Tensor, e2: Tensor) -> Tensor:
        """(N, e1_dim), (N, e2_dim) -> (N,) logits."""
        if e1.ndim != 2 or e2.ndim != 2 or e1.shape[1] != self.e1_dim or e2.shape[1] != self.e2_dim:
            raise DimMismatchError(
                f"fusion expects ({self.e1_dim}, {self.e2_dim})-d embeddings, got {e1.shape} and {e2.shape}"
            )
        x = F.concat([e1, e2], axis=1)
        x = (x - self.input_mean.astype(x.dtype)) * (1.0 / self.input_scale).astype(x.dtype)
        logits = self.fc(x)
        return logits.reshape(logits.shape[0])


def fuse_forward(head: FusionHead, e1: np.ndarray, e2: np.ndarray) -> float:
    """Logit for one (e1, e2) pair."""
    with no_grad():
        out = head(Tensor(np.atleast_2d(e1)), Tensor(np.atleast_2d(e2)))
    return float(out.data[0])


class DimMismatchError(CoughScreenError):
    """Raised when embedding sizes disagree with the fusion head."""

    pass
