"""Differentiable layer primitives built on :class:`Tensor`."""

from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions.errors import ContractError, DimensionError
from .tensor import Tensor


def conv_output_size(size: int, kernel: int, stride: int, pad: int, axis: str) -> int:
    """Output length along one spatial axis; the division must be exact."""
    span = size + 2 * pad - kernel
    if span < 0:
        raise DimensionError(
            f"{axis} axis: kernel {kernel} does not fit input {size} with pad {pad}"
        )
    if span % stride:
        raise DimensionError(
            f"{axis} axis: ({size} + 2*{pad} - {kernel}) is not divisible by stride {stride}"
        )
    return span // stride + 1


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """y = x W^T + b for x of shape [N, in] and W of shape [out, in]."""
    if x.ndim != 2:
        raise DimensionError(f"linear expects [batch, features] input, got {x.shape}")
    if x.shape[1] != weight.shape[1]:
        raise DimensionError(
            f"feature axis: input has {x.shape[1]} features, weight expects {weight.shape[1]}"
        )
    out = x @ weight.T
    return out if bias is None else out + bias


def pad2d(x: Tensor, pad: int) -> Tensor:
    """Zero-pads the two trailing (spatial) axes of an [N, C, H, W] tensor."""
    if pad == 0:
        return x
    widths = ((0, 0), (0, 0), (pad, pad), (pad, pad))

    def backward(g):
        return (g[:, :, pad:-pad, pad:-pad],)

    return Tensor._from_op(np.pad(x.data, widths), (x,), backward, "pad2d")


def conv2d(x: Tensor, weight: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation of ``x`` ([C,H,W] or [N,C,H,W]) with ``weight`` [O,C,K,K]."""
    if stride < 1 or pad < 0:
        raise ContractError(f"conv2d needs stride >= 1 and pad >= 0, got {stride}, {pad}")
    if weight.ndim != 4:
        raise DimensionError(f"conv2d weight must be [out, in, K, K], got {weight.shape}")
    unbatched = x.ndim == 3
    if unbatched:
        x = x.reshape(1, *x.shape)
    if x.ndim != 4:
        raise DimensionError(f"conv2d input must be [C,H,W] or [N,C,H,W], got {x.shape}")

    out_channels, in_channels, k_h, k_w = weight.shape
    if k_h != k_w or k_h % 2 == 0:
        raise DimensionError(f"kernel axes must be square and odd, got {k_h}x{k_w}")
    if x.shape[1] != in_channels:
        raise DimensionError(
            f"channel axis: input has {x.shape[1]} channels, weight expects {in_channels}"
        )
    k = k_h
    h_out = conv_output_size(x.shape[2], k, stride, pad, "height")
    w_out = conv_output_size(x.shape[3], k, stride, pad, "width")

    xp = pad2d(x, pad)
    windows = sliding_window_view(xp.data, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    out = np.tensordot(windows, weight.data, axes=([1, 4, 5], [1, 2, 3]))
    out = np.ascontiguousarray(out.transpose(0, 3, 1, 2))
    padded_shape = xp.shape
    w_data = weight.data

    def backward(g):
        g_w = None
        g_x = None
        if weight.requires_grad:
            g_w = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        if xp.requires_grad:
            g_windows = np.tensordot(g, w_data, axes=([1], [0]))
            g_x = np.zeros(padded_shape, dtype=np.float64)
            h_stop = stride * h_out
            w_stop = stride * w_out
            for i in range(k):
                for j in range(k):
                    g_x[:, :, i : i + h_stop : stride, j : j + w_stop : stride] += (
                        g_windows[:, :, :, :, i, j].transpose(0, 3, 1, 2)
                    )
        return g_x, g_w

    result = Tensor._from_op(out, (xp, weight), backward, "conv2d")
    if unbatched:
        result = result.reshape(out_channels, h_out, w_out)
    return result


def center_tap_sample(x: Tensor, kernel: int, stride: int, pad: int) -> Tensor:
    """Samples ``x`` at the positions the center tap of a KxK kernel visits.

    A 1x1 convolution applied to the result equals convolving ``x`` with that 1x1
    kernel zero-padded to KxK (odd K), using the given stride and padding.
    """
    h_out = conv_output_size(x.shape[-2], kernel, stride, pad, "height")
    w_out = conv_output_size(x.shape[-1], kernel, stride, pad, "width")
    c = (kernel - 1) // 2
    xp = pad2d(x, pad)
    return xp[
        :,
        :,
        c : c + stride * (h_out - 1) + 1 : stride,
        c : c + stride * (w_out - 1) + 1 : stride,
    ]


def flatten(x: Tensor) -> Tensor:
    return x.reshape(x.shape[0], -1)


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean of squared differences over every element (batch and features)."""
    if a.shape != b.shape:
        raise DimensionError(f"mse operands differ in shape: {a.shape} vs {b.shape}")
    return (a - b).square().mean()


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean negative log-likelihood of integer ``labels`` under softmax(logits)."""
    if logits.ndim != 2:
        raise DimensionError(f"cross_entropy expects [batch, classes] logits, got {logits.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    n, classes = logits.shape
    if labels.shape != (n,):
        raise DimensionError(f"label axis: expected {n} labels, got {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise ContractError(f"labels must lie in [0, {classes}), got range "
                            f"[{labels.min()}, {labels.max()}]")
    logp = log_softmax(logits.data)
    rows = np.arange(n)
    loss = -logp[rows, labels].mean()

    def backward(g):
        probs = np.exp(logp)
        probs[rows, labels] -= 1.0
        return (probs * (g / n),)

    return Tensor._from_op(np.asarray(loss), (logits,), backward, "cross_entropy")
