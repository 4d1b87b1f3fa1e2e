"""
Reverse-mode autodiff tensor backed by numpy arrays.

Every op that produces a Tensor records its parents and a backward
closure mapping the output gradient to one gradient per parent. Calling
``backward()`` on a scalar walks the graph in reverse topological order
and accumulates gradients into the leaves that require them.

Graph recording is switched off inside ``no_grad()``; the switch is a
context variable, so inference threads never disturb a training thread.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Any

import numpy as np

from src.errors import CoughScreenError

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_grad_enabled: ContextVar[bool] = ContextVar("grad_enabled", default=True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording in the current context."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


class Tensor:
    """
    n-dimensional array with an optional gradient slot.

    ``data`` is row-major; ``grad`` (when present) has the same shape.
    Float64 is used for gradient checks, float32 for training.
    """

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        name: str = "",
        dtype: np.dtype | type | None = None,
    ):
        array = np.asarray(data, dtype=dtype)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)
        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.name = name
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None

    # --- construction from ops ---

    @classmethod
    def from_op(cls, data: np.ndarray, parents: Sequence[Tensor], backward: BackwardFn) -> Tensor:
        """Wrap an op result, recording the graph edge when any parent needs gradients."""
        needs_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
        out = cls(data, requires_grad=needs_grad)
        if needs_grad:
            out._parents = tuple(parents)
            out._backward = backward
        return out

    # --- convenience ---

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        req = ", requires_grad=True" if self.requires_grad else ""
        nm = f", name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{req}{nm})"

    # --- autograd core ---

    def backward(self, grad: np.ndarray | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every leaf with ``requires_grad``."""
        if grad is None:
            if self.data.size != 1:
                raise GradientError("grad must be provided for non-scalar outputs")
            grad = np.ones_like(self.data)
        pending: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=self.dtype)}

        for node in reversed(self._topological_order()):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                if node.requires_grad:
                    node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, parent_grad in zip(node._parents, node._backward(g), strict=True):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = parent_grad if key not in pending else pending[key] + parent_grad

    def _topological_order(self) -> list[Tensor]:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))
        return order

    # --- broadcasting helpers ---

    @staticmethod
    def _unbroadcast(g: np.ndarray, target_shape: tuple[int, ...]) -> np.ndarray:
        if g.shape == target_shape:
            return g
        while g.ndim > len(target_shape):
            g = g.sum(axis=0)
        for axis, size in enumerate(target_shape):
            if size == 1 and g.shape[axis] != 1:
                g = g.sum(axis=axis, keepdims=True)
        return g

    def _lift(self, other: Tensor | float | np.ndarray) -> Tensor:
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    # --- elementwise arithmetic ---

    def __add__(self, other: Tensor | float | np.ndarray) -> Tensor:
        other = self._lift(other)
        a_shape, b_shape = self.shape, other.shape

        def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            return self._unbroadcast(g, a_shape), self._unbroadcast(g, b_shape)

        return Tensor.from_op(self.data + other.data, (self, other), backward)

    __radd__ = __add__

    def __sub__(self, other: Tensor | float | np.ndarray) -> Tensor:
        return self + (-self._lift(other))

    def __rsub__(self, other: Tensor | float | np.ndarray) -> Tensor:
        return self._lift(other) + (-self)

    def __neg__(self) -> Tensor:
        return Tensor.from_op(-self.data, (self,), lambda g: (-g,))

    def __mul__(self, other: Tensor | float | np.ndarray) -> Tensor:
        other = self._lift(other)
        a, b = self.data, other.data

        def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            return self._unbroadcast(g * b, a.shape), self._unbroadcast(g * a, b.shape)

        return Tensor.from_op(a * b, (self, other), backward)

    __rmul__ = __mul__

    def __matmul__(self, other: Tensor) -> Tensor:
        a, b = self.data, other.data
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeMismatchError(f"matmul {a.shape} @ {b.shape}")

        def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
            return g @ b.T, a.T @ g

        return Tensor.from_op(a @ b, (self, other), backward)

    # --- shape and reductions ---

    def reshape(self, *shape: int) -> Tensor:
        original = self.shape
        return Tensor.from_op(self.data.reshape(shape), (self,), lambda g: (g.reshape(original),))

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        original = self.shape

        def backward(g: np.ndarray) -> tuple[np.ndarray]:
            if not keepdims and axis is not None:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, original).copy(),)

        return Tensor.from_op(self.data.sum(axis=axis, keepdims=keepdims), (self,), backward)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        count = self.data.size if axis is None else int(np.prod([self.shape[a] for a in np.atleast_1d(axis)]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)


class ShapeMismatchError(CoughScreenError):
    """Raised when operand shapes are incompatible."""

    pass


class GradientError(CoughScreenError):
    """Raised for invalid backward requests."""

    pass
