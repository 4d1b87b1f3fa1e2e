"""
Differentiable operators over ``Tensor``.

Each op computes its forward result with numpy and hands ``Tensor.from_op``
a closure returning one gradient per parent. Reductions run in numpy's
fixed order, so repeated forward passes are bit-identical.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from src.nn.tensor import ShapeMismatchError, Tensor


def _pair(value: int | tuple[int, int]) -> tuple[int, int]:
    return (value, value) if isinstance(value, int) else (int(value[0]), int(value[1]))


# ──────────────────────── convolution ────────────────────────


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int | tuple[int, int] = 1,
    padding: int | tuple[int, int] = 0,
) -> Tensor:
    """
    2-D cross-correlation of x[N,C,H,W] with weight[F,C,kh,kw].

    Output spatial size is (H + 2*pad - kh) // stride + 1 per axis.
    """
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeMismatchError(f"conv2d expects 4-D input and kernel, got {x.shape} and {weight.shape}")
    n, c, h, w = x.shape
    f, kc, kh, kw = weight.shape
    if kc != c:
        raise ShapeMismatchError(f"conv2d kernel has {kc} input channels, input has {c}")
    sh, sw = _pair(stride)
    ph, pw = _pair(padding)
    if sh < 1 or sw < 1:
        raise ShapeMismatchError(f"stride must be >= 1, got {(sh, sw)}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw))) if ph or pw else x.data
    out_h = (h + 2 * ph - kh) // sh + 1
    out_w = (w + 2 * pw - kw) // sw + 1
    if out_h < 1 or out_w < 1:
        raise ShapeMismatchError(f"kernel {(kh, kw)} larger than padded input {xp.shape[2:]}")

    # windows: (N, C, out_h, out_w, kh, kw)
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::sh, ::sw][:, :, :out_h, :out_w]
    k = weight.data
    out = np.tensordot(windows, k, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data.reshape(1, f, 1, 1)
    out = np.ascontiguousarray(out)

    def backward(g: np.ndarray) -> tuple[np.ndarray | None, ...]:
        grad_w = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_xp = np.zeros(xp.shape, dtype=g.dtype)
        for i in range(kh):
            for j in range(kw):
                contrib = np.tensordot(g, k[:, :, i, j], axes=([1], [0])).transpose(0, 3, 1, 2)
                grad_xp[:, :, i : i + sh * (out_h - 1) + 1 : sh, j : j + sw * (out_w - 1) + 1 : sw] += contrib
        grad_x = grad_xp[:, :, ph : ph + h, pw : pw + w]
        grads: list[np.ndarray | None] = [grad_x, grad_w]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return tuple(grads)

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, backward)


def conv1d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """1-D cross-correlation of x[N,C,L] with weight[F,C,k], run as a height-1 conv2d."""
    if x.ndim != 3 or weight.ndim != 3:
        raise ShapeMismatchError(f"conv1d expects 3-D input and kernel, got {x.shape} and {weight.shape}")
    n, c, length = x.shape
    f, kc, k = weight.shape
    out = conv2d(
        x.reshape(n, c, 1, length),
        weight.reshape(f, kc, 1, k),
        bias,
        stride=(1, stride),
        padding=(0, padding),
    )
    return out.reshape(n, f, out.shape[3])


# ──────────────────────── normalization ────────────────────────


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.9,
    eps: float = 1e-5,
) -> Tensor:
    """
    Per-channel normalization over every axis except axis 1.

    Training mode uses batch statistics and updates the running buffers in
    place (``momentum`` is the keep rate; the running variance is unbiased).
    Eval mode normalizes with the running buffers.
    """
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeMismatchError(f"batch_norm expects ({c},) affine params, got {gamma.shape}, {beta.shape}")
    axes = tuple(a for a in range(x.ndim) if a != 1)
    shape = [1] * x.ndim
    shape[1] = c
    gam = gamma.data.reshape(shape)
    bet = beta.data.reshape(shape)

    if training:
        count = x.size // c
        mean = x.data.mean(axis=axes, keepdims=True)
        var = x.data.var(axis=axes, keepdims=True)
        unbiased = var * (count / (count - 1)) if count > 1 else var
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mean.reshape(c).astype(running_mean.dtype)
        running_var *= momentum
        running_var += (1.0 - momentum) * unbiased.reshape(c).astype(running_var.dtype)
    else:
        count = 0
        mean = running_mean.reshape(shape).astype(x.dtype)
        var = running_var.reshape(shape).astype(x.dtype)

    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x.data - mean) * inv_std
    out = gam * x_hat + bet

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        grad_gamma = (g * x_hat).sum(axis=axes)
        grad_beta = g.sum(axis=axes)
        d_hat = g * gam
        if training:
            grad_x = (inv_std / count) * (
                count * d_hat
                - d_hat.sum(axis=axes, keepdims=True)
                - x_hat * (d_hat * x_hat).sum(axis=axes, keepdims=True)
            )
        else:
            grad_x = d_hat * inv_std
        return grad_x, grad_gamma, grad_beta

    return Tensor.from_op(out, (x, gamma, beta), backward)


# ──────────────────────── activations and dense ────────────────────────


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor.from_op(np.where(mask, x.data, 0).astype(x.dtype), (x,), lambda g: (g * mask,))


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """y = x @ weight.T + bias with x[N,in], weight[out,in]."""
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeMismatchError(f"linear {x.shape} with weight {weight.shape}")
    a, w = x.data, weight.data
    out = a @ w.T
    if bias is not None:
        out = out + bias.data

    def backward(g: np.ndarray) -> tuple[np.ndarray, ...]:
        grads = [g @ w, g.T @ a]
        if bias is not None:
            grads.append(g.sum(axis=0))
        return tuple(grads)

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor.from_op(out, parents, backward)


# ──────────────────────── pooling ────────────────────────


def avg_pool2d(x: Tensor, kernel: tuple[int, int]) -> Tensor:
    """Non-overlapping average pooling; trailing rows/columns that do not fill a window are dropped."""
    n, c, h, w = x.shape
    kh, kw = kernel
    oh, ow = h // kh, w // kw
    if oh < 1 or ow < 1:
        raise ShapeMismatchError(f"pool kernel {kernel} larger than input {(h, w)}")
    cropped = x.data[:, :, : oh * kh, : ow * kw]
    out = cropped.reshape(n, c, oh, kh, ow, kw).mean(axis=(3, 5))
    scale = 1.0 / (kh * kw)

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros(x.shape, dtype=g.dtype)
        spread = np.repeat(np.repeat(g, kh, axis=2), kw, axis=3) * scale
        grad[:, :, : oh * kh, : ow * kw] = spread
        return (grad,)

    return Tensor.from_op(out, (x,), backward)


def pool2x2(x: Tensor) -> Tensor:
    """2x2 average pooling that leaves an axis of size 1 alone."""
    _, _, h, w = x.shape
    return avg_pool2d(x, (2 if h >= 2 else 1, 2 if w >= 2 else 1))


def _adaptive_matrix(length: int, out_len: int, dtype: np.dtype) -> np.ndarray:
    matrix = np.zeros((length, out_len), dtype=dtype)
    for j in range(out_len):
        start = (j * length) // out_len
        end = -((-(j + 1) * length) // out_len)
        matrix[start:end, j] = 1.0 / (end - start)
    return matrix


def adaptive_avg_pool1d(x: Tensor, out_len: int) -> Tensor:
    """Average x[..., L] into ``out_len`` bins; bins overlap or repeat when L does not divide evenly."""
    if out_len < 1:
        raise ShapeMismatchError(f"out_len must be >= 1, got {out_len}")
    matrix = _adaptive_matrix(x.shape[-1], out_len, x.dtype)
    out = x.data @ matrix
    return Tensor.from_op(out, (x,), lambda g: (g @ matrix.T,))


def gem_pool(x: Tensor, p: Tensor, eps: float = 1e-6) -> Tensor:
    """
    Generalized-mean pooling of x[N,C,H,W] over H and W.

    out[n,c] = (mean(clamp(x, eps) ** p)) ** (1/p); ``p`` is a one-element
    tensor and receives a gradient when it requires one.
    """
    if x.ndim != 4:
        raise ShapeMismatchError(f"gem_pool expects 4-D input, got {x.shape}")
    pv = float(p.data.reshape(-1)[0])
    mask = x.data > eps
    xc = np.maximum(x.data, eps)
    powered = xc**pv
    hw = x.shape[2] * x.shape[3]
    m = np.maximum(powered.mean(axis=(2, 3)), np.finfo(x.dtype).tiny)
    out = m ** (1.0 / pv)

    def backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        coef = (g * m ** (1.0 / pv - 1.0) / hw)[:, :, None, None]
        grad_x = coef * xc ** (pv - 1.0) * mask
        dm_dp = (powered * np.log(xc)).mean(axis=(2, 3))
        dout_dp = out * (-np.log(m) / pv**2 + dm_dp / (pv * m))
        grad_p = np.array([(g * dout_dp).sum()], dtype=p.dtype).reshape(p.shape)
        return grad_x, grad_p

    return Tensor.from_op(out, (x, p), backward)


# ──────────────────────── shape ops ────────────────────────


def repeat(x: Tensor, repeats: int, axis: int) -> Tensor:
    """Repeat each element ``repeats`` times along ``axis`` (np.repeat semantics)."""
    axis = axis % x.ndim
    out = np.repeat(x.data, repeats, axis=axis)
    original = x.shape

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        split = original[:axis] + (original[axis], repeats) + original[axis + 1 :]
        return (g.reshape(split).sum(axis=axis + 1),)

    return Tensor.from_op(out, (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors[1:]:
        same = all(t.shape[a] == tensors[0].shape[a] for a in range(ndim) if a != axis)
        if t.ndim != ndim or not same:
            raise ShapeMismatchError(f"concat along {axis}: {[t.shape for t in tensors]}")
    out = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g: np.ndarray) -> list[np.ndarray]:
        return np.split(g, bounds, axis=axis)

    return Tensor.from_op(out, tuple(tensors), backward)


# ──────────────────────── loss ────────────────────────


def bce_with_logits(logits: Tensor, targets: np.ndarray) -> Tensor:
    """
    Mean binary cross-entropy on raw scores.

    Uses max(z, 0) - z*y + log1p(exp(-|z|)), which never overflows and is
    exactly zero for a saturated correct prediction.
    """
    z = logits.data
    y = np.asarray(targets, dtype=z.dtype).reshape(z.shape)
    per_item = np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))
    loss = np.asarray(per_item.mean(), dtype=z.dtype)
    n = z.size

    def backward(g: np.ndarray) -> tuple[np.ndarray]:
        return ((expit(z) - y) * (g / n),)

    return Tensor.from_op(loss, (logits,), backward)


def sigmoid(z: np.ndarray | float) -> np.ndarray:
    return expit(z)
