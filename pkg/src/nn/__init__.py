"""Minimal numpy autodiff engine used by both backbones."""

from src.nn.layers import BatchNorm, Conv1d, Conv2d, ConvBnRelu, GeM, Linear, Module, Parameter, Sequential
from src.nn.optim import Adam, AdamState, Optimizer, TrainConfig, adam_step, cosine_lr
from src.nn.tensor import GradientError, ShapeMismatchError, Tensor, no_grad

__all__ = [
    "Adam",
    "AdamState",
    "BatchNorm",
    "Conv1d",
    "Conv2d",
    "ConvBnRelu",
    "GeM",
    "GradientError",
    "Linear",
    "Module",
    "Optimizer",
    "Parameter",
    "Sequential",
    "ShapeMismatchError",
    "Tensor",
    "TrainConfig",
    "adam_step",
    "cosine_lr",
    "no_grad",
]
