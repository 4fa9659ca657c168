from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def numerical_grad(fn: Callable[[], Tensor], tensor: Tensor, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of the scalar ``fn()`` with respect to ``tensor``."""
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = fn().item()
        flat[i] = original - h
        minus = fn().item()
        flat[i] = original
        out[i] = (plus - minus) / (2.0 * h)
    return grad


def gradcheck(fn: Callable[[], Tensor], tensors: Sequence[Tensor], h: float = 1e-5) -> float:
    """Largest relative error between analytic and finite-difference gradients.

    ``fn`` must rebuild the graph from the current values of ``tensors`` on each call.
    """
    for t in tensors:
        t.requires_grad = True
        t.zero_grad()
    fn().backward()
    worst = 0.0
    for t in tensors:
        analytic = t.grad.copy()
        numeric = numerical_grad(fn, t, h)
        scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-8)
        worst = max(worst, float(np.abs(analytic - numeric).max() / scale))
    return worst
