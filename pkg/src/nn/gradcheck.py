"""Central finite-difference gradient checking."""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from src.nn.tensor import Tensor


def numerical_grad(fn: Callable[[], Tensor], tensor: Tensor, step: float = 1e-6) -> np.ndarray:
    """d fn() / d tensor by central differences; ``fn`` must return a scalar Tensor."""
    grad = np.zeros_like(tensor.data, dtype=np.float64)
    flat = tensor.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        plus = fn().item()
        flat[i] = original - step
        minus = fn().item()
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """||a - n|| / max(||a||, ||n||), zero when both vanish."""
    denom = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)))
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric)) / denom


def check_gradients(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    step: float = 1e-6,
) -> dict[str, float]:
    """
    Compare analytic and numerical gradients of scalar ``fn()`` for every input.

    Returns a relative error per input, keyed by tensor name (or position).
    """
    for t in inputs:
        t.grad = None
    fn().backward()
    errors: dict[str, float] = {}
    for index, t in enumerate(inputs):
        analytic = np.zeros_like(t.data) if t.grad is None else t.grad.copy()
        numeric = numerical_grad(fn, t, step)
        errors[t.name or str(index)] = relative_error(analytic, numeric)
    return errors
