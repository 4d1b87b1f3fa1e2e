"""
Training hyper-parameters, the cosine learning-rate schedule and Adam.

Learning rates are written as powers of ten: a maximum of 1e-3 decays along
a half cosine to a floor of 1e-5 over the configured epochs.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal, Protocol

import numpy as np
from pydantic import model_validator
from pydantic_settings import BaseSettings

from src.nn.tensor import ShapeMismatchError, Tensor

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class TrainConfig(BaseSettings):
    lr_max: float = 1e-3
    lr_min: float = 1e-5
    batch_size: int = 16
    epochs: int = 30
    loss: Literal["bce_with_logits"] = "bce_with_logits"
    seed: int = 42

    model_config = {"env_prefix": "COUGHSCREEN_TRAINING_"}

    @model_validator(mode="after")
    def validate_ranges(self) -> TrainConfig:
        if not 0 < self.lr_min <= self.lr_max:
            raise ValueError(f"need 0 < lr_min <= lr_max, got {self.lr_min} and {self.lr_max}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        return self


def cosine_lr(epoch: int, cfg: TrainConfig) -> float:
    """lr_min + (lr_max - lr_min) * (1 + cos(pi * epoch / epochs)) / 2 for 0 <= epoch <= epochs."""
    if not 0 <= epoch <= cfg.epochs:
        raise ValueError(f"epoch {epoch} outside [0, {cfg.epochs}]")
    return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) * (1.0 + math.cos(math.pi * epoch / cfg.epochs))


@dataclass
class AdamState:
    """First/second moments per parameter plus the shared step count."""

    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    step: int = 0

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray]) -> AdamState:
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray | None],
    state: AdamState,
    lr: float,
) -> None:
    """
    One bias-corrected Adam update, applied in place to ``params`` and ``state``.

    A ``None`` gradient counts as zero.
    """
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ShapeMismatchError(
            f"adam state for {len(state.m)} params, got {len(params)} params and {len(grads)} grads"
        )
    state.step += 1
    t = state.step
    correction1 = 1.0 - ADAM_BETA1**t
    correction2 = 1.0 - ADAM_BETA2**t
    for param, grad, m, v in zip(params, grads, state.m, state.v, strict=True):
        if m.shape != param.shape:
            raise ShapeMismatchError(f"adam moment {m.shape} vs param {param.shape}")
        g = np.zeros_like(param) if grad is None else grad.astype(param.dtype, copy=False)
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        param -= (lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)).astype(param.dtype, copy=False)


class Optimizer(Protocol):
    """Anything that can update a fixed list of parameters from their ``grad`` slots."""

    def step(self, lr: float) -> None: ...

    def zero_grad(self) -> None: ...


class Adam:
    def __init__(self, params: Sequence[Tensor]):
        self.params = list(params)
        self.state = AdamState.for_params([p.data for p in self.params])

    def step(self, lr: float) -> None:
        adam_step([p.data for p in self.params], [p.grad for p in self.params], self.state, lr)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
