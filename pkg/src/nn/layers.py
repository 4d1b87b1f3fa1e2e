"""
Module system and the layers the backbones are built from.

A ``Module`` tracks its parameters, buffers and child modules in
registration order, so ``state_dict()`` names and ordering are stable and
checkpoints are reproducible.
"""

from __future__ import annotations

from collections.abc import Iterator
from typing import Any

import numpy as np

from src.nn import functional as F
from src.nn.tensor import ShapeMismatchError, Tensor

DEFAULT_DTYPE = np.float32


class Parameter(Tensor):
    """Trainable leaf tensor."""

    def __init__(self, data: Any, name: str = "", dtype: np.dtype | type | None = None):
        super().__init__(data, requires_grad=True, name=name, dtype=dtype)


class Module:
    """Base class for layers and models."""

    def __init__(self) -> None:
        object.__setattr__(self, "_parameters", {})
        object.__setattr__(self, "_buffers", {})
        object.__setattr__(self, "_modules", {})
        object.__setattr__(self, "training", True)
        object.__setattr__(self, "frozen", False)

    def __setattr__(self, name: str, value: Any) -> None:
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name: str, array: np.ndarray) -> None:
        self._buffers[name] = array
        object.__setattr__(self, name, array)

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        raise NotImplementedError

    # --- traversal ---

    def named_modules(self, prefix: str = "") -> Iterator[tuple[str, Module]]:
        yield prefix, self
        for name, child in self._modules.items():
            yield from child.named_modules(f"{prefix}.{name}" if prefix else name)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for module_name, module in self.named_modules(prefix):
            for name, param in module._parameters.items():
                yield (f"{module_name}.{name}" if module_name else name), param

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for module_name, module in self.named_modules(prefix):
            for name, buf in module._buffers.items():
                yield (f"{module_name}.{name}" if module_name else name), buf

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def trainable_parameters(self) -> list[Parameter]:
        return [p for p in self.parameters() if p.requires_grad]

    # --- state ---

    def state_dict(self) -> dict[str, np.ndarray]:
        """Parameters then buffers, each in registration order."""
        state: dict[str, np.ndarray] = {name: p.data for name, p in self.named_parameters()}
        state.update(dict(self.named_buffers()))
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """Copy arrays into the existing parameters and buffers (shapes must match)."""
        own = self.state_dict()
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise ShapeMismatchError(f"state keys differ: missing={missing} unexpected={unexpected}")
        for name, target in own.items():
            source = np.asarray(state[name])
            if source.shape != target.shape:
                raise ShapeMismatchError(f"{name}: expected {target.shape}, got {source.shape}")
            np.copyto(target, source.astype(target.dtype, copy=False))

    # --- modes ---

    def train(self, mode: bool = True) -> Module:
        for _, module in self.named_modules():
            object.__setattr__(module, "training", mode and not module.frozen)
        return self

    def eval(self) -> Module:
        return self.train(False)

    def freeze(self) -> Module:
        """Stop gradients and running-stat updates for this module and its children."""
        for _, module in self.named_modules():
            object.__setattr__(module, "frozen", True)
        for param in self.parameters():
            param.requires_grad = False
            param.grad = None
        return self.eval()

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.grad = None


class Sequential(Module):
    def __init__(self, *layers: Module):
        super().__init__()
        for index, layer in enumerate(layers):
            setattr(self, str(index), layer)

    def __iter__(self) -> Iterator[Module]:
        return iter(self._modules.values())

    def __len__(self) -> int:
        return len(self._modules)

    def forward(self, x: Tensor) -> Tensor:
        for layer in self:
            x = layer(x)
        return x


# ──────────────────────── layers ────────────────────────


def _he_normal(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, dtype: type) -> np.ndarray:
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int = 3,
        stride: int = 1,
        padding: int = 1,
        bias: bool = False,
        rng: np.random.Generator | None = None,
        dtype: type = DEFAULT_DTYPE,
    ):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        self.weight = Parameter(_he_normal(rng, shape, in_channels * kernel_size**2, dtype))
        self.bias = Parameter(np.zeros(out_channels, dtype=dtype)) if bias else None
        self.stride = stride
        self.padding = padding

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, self.stride, self.padding)


class Conv1d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int = 1,
        padding: int = 0,
        bias: bool = False,
        rng: np.random.Generator | None = None,
        dtype: type = DEFAULT_DTYPE,
    ):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        shape = (out_channels, in_channels, kernel_size)
        self.weight = Parameter(_he_normal(rng, shape, in_channels * kernel_size, dtype))
        self.bias = Parameter(np.zeros(out_channels, dtype=dtype)) if bias else None
        self.stride = stride
        self.padding = padding

    def forward(self, x: Tensor) -> Tensor:
        return F.conv1d(x, self.weight, self.bias, self.stride, self.padding)


class BatchNorm(Module):
    """Batch normalization over axis 1 for 3-D or 4-D inputs."""

    def __init__(self, num_features: int, momentum: float = 0.9, eps: float = 1e-5, dtype: type = DEFAULT_DTYPE):
        super().__init__()
        self.weight = Parameter(np.ones(num_features, dtype=dtype))
        self.bias = Parameter(np.zeros(num_features, dtype=dtype))
        self.register_buffer("running_mean", np.zeros(num_features, dtype=dtype))
        self.register_buffer("running_var", np.ones(num_features, dtype=dtype))
        self.momentum = momentum
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return F.batch_norm(
            x,
            self.weight,
            self.bias,
            self.running_mean,
            self.running_var,
            training=self.training,
            momentum=self.momentum,
            eps=self.eps,
        )


class Linear(Module):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        bias: bool = True,
        rng: np.random.Generator | None = None,
        dtype: type = DEFAULT_DTYPE,
    ):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        limit = np.sqrt(6.0 / (in_features + out_features))
        self.weight = Parameter(rng.uniform(-limit, limit, (out_features, in_features)).astype(dtype))
        self.bias = Parameter(np.zeros(out_features, dtype=dtype)) if bias else None
        self.in_features = in_features
        self.out_features = out_features

    def forward(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)


class GeM(Module):
    """Generalized-mean pooling with a learnable exponent (initial p = 3)."""

    def __init__(self, p: float = 3.0, eps: float = 1e-6, dtype: type = DEFAULT_DTYPE):
        super().__init__()
        self.p = Parameter(np.array([p], dtype=dtype))
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return F.gem_pool(x, self.p, self.eps)


class ConvBnRelu(Module):
    """conv3x3 -> batch norm -> ReLU."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        stride: int = 1,
        rng: np.random.Generator | None = None,
        dtype: type = DEFAULT_DTYPE,
    ):
        super().__init__()
        self.conv = Conv2d(in_channels, out_channels, 3, stride=stride, padding=1, rng=rng, dtype=dtype)
        self.bn = BatchNorm(out_channels, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return F.relu(self.bn(self.conv(x)))
