from abc import ABC, abstractmethod
from typing import Any, Dict, Tuple

import numpy as np

from ..exceptions.errors import ContractError, DimensionError
from ..tensorcore import Tensor, conv2d, conv_output_size, flatten, linear
from .enums import LayerKind

Shape = Tuple[int, ...]


class Layer(ABC):
    """One stage of a feed-forward network, applied to batched tensors."""

    kind: LayerKind

    def parameters(self) -> Dict[str, Tensor]:
        """Trainable tensors in canonical order (weight before bias)."""
        return {}

    @property
    def is_parameterized(self) -> bool:
        return bool(self.parameters())

    @property
    def is_editable(self) -> bool:
        return False

    @abstractmethod
    def forward(self, x: Tensor) -> Tensor:
        """Applies the layer to a batch."""

    @abstractmethod
    def output_shape(self, shape: Shape) -> Shape:
        """Per-sample output shape for a per-sample input shape."""

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind.value}

    def copy(self) -> "Layer":
        return layer_from_description(self.describe(), self._copied_params())

    def _copied_params(self) -> Dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.parameters().items()}


class Dense(Layer):
    kind = LayerKind.DENSE

    def __init__(self, weight: np.ndarray, bias: np.ndarray):
        weight = np.asarray(weight, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if weight.ndim != 2 or bias.shape != (weight.shape[0],):
            raise DimensionError(
                f"dense layer needs weight [out, in] and bias [out], got {weight.shape}, {bias.shape}"
            )
        self.weight = Tensor(weight, name="weight")
        self.bias = Tensor(bias, name="bias")

    @property
    def in_features(self) -> int:
        return self.weight.shape[1]

    @property
    def out_features(self) -> int:
        return self.weight.shape[0]

    @property
    def is_editable(self) -> bool:
        return True

    def parameters(self) -> Dict[str, Tensor]:
        return {"weight": self.weight, "bias": self.bias}

    def forward(self, x: Tensor) -> Tensor:
        return linear(x, self.weight, self.bias)

    def output_shape(self, shape: Shape) -> Shape:
        if shape != (self.in_features,):
            raise DimensionError(
                f"feature axis: dense layer expects ({self.in_features},), got {shape}"
            )
        return (self.out_features,)

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "in_features": self.in_features,
            "out_features": self.out_features,
        }


class Conv2D(Layer):
    kind = LayerKind.CONV2D

    def __init__(self, weight: np.ndarray, bias: np.ndarray, stride: int = 1, pad: int = 0):
        weight = np.asarray(weight, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64)
        if weight.ndim != 4 or bias.shape != (weight.shape[0],):
            raise DimensionError(
                f"conv layer needs weight [out, in, K, K] and bias [out], got {weight.shape}, {bias.shape}"
            )
        if weight.shape[2] != weight.shape[3] or weight.shape[2] % 2 == 0:
            raise DimensionError(f"kernel must be square with odd size, got {weight.shape[2:]}")
        self.weight = Tensor(weight, name="weight")
        self.bias = Tensor(bias, name="bias")
        self.stride = int(stride)
        self.pad = int(pad)

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def kernel_size(self) -> int:
        return self.weight.shape[2]

    @property
    def is_editable(self) -> bool:
        return True

    def parameters(self) -> Dict[str, Tensor]:
        return {"weight": self.weight, "bias": self.bias}

    def forward(self, x: Tensor) -> Tensor:
        out = conv2d(x, self.weight, self.stride, self.pad)
        return out + self.bias.reshape(1, self.out_channels, 1, 1)

    def output_shape(self, shape: Shape) -> Shape:
        if len(shape) != 3 or shape[0] != self.in_channels:
            raise DimensionError(
                f"channel axis: conv layer expects ({self.in_channels}, H, W), got {shape}"
            )
        k = self.kernel_size
        return (
            self.out_channels,
            conv_output_size(shape[1], k, self.stride, self.pad, "height"),
            conv_output_size(shape[2], k, self.stride, self.pad, "width"),
        )

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel_size": self.kernel_size,
            "stride": self.stride,
            "pad": self.pad,
        }


class ReLU(Layer):
    kind = LayerKind.RELU

    def forward(self, x: Tensor) -> Tensor:
        return x.relu()

    def output_shape(self, shape: Shape) -> Shape:
        return shape


class Flatten(Layer):
    kind = LayerKind.FLATTEN

    def forward(self, x: Tensor) -> Tensor:
        return flatten(x)

    def output_shape(self, shape: Shape) -> Shape:
        return (int(np.prod(shape)),)


class FrozenNorm(Layer):
    """Per-channel normalization with statistics fixed at construction.

    y = weight * (x - mean) / sqrt(var + eps) + bias. ``weight`` and ``bias`` train;
    ``running_mean`` and ``running_var`` are plain arrays no optimizer can reach.
    """

    kind = LayerKind.FROZEN_NORM

    def __init__(
        self,
        weight: np.ndarray,
        bias: np.ndarray,
        running_mean: np.ndarray,
        running_var: np.ndarray,
        eps: float = 1e-5,
    ):
        shapes = {np.shape(a) for a in (weight, bias, running_mean, running_var)}
        if len(shapes) != 1 or len(next(iter(shapes))) != 1:
            raise DimensionError(f"frozen norm arrays must share one 1-D shape, got {shapes}")
        if np.any(np.asarray(running_var) < 0):
            raise ContractError("running variance must be nonnegative")
        self.weight = Tensor(weight, name="weight")
        self.bias = Tensor(bias, name="bias")
        self.running_mean = np.array(running_mean, dtype=np.float64)
        self.running_var = np.array(running_var, dtype=np.float64)
        self.eps = float(eps)

    @property
    def channels(self) -> int:
        return self.weight.shape[0]

    def parameters(self) -> Dict[str, Tensor]:
        return {"weight": self.weight, "bias": self.bias}

    def _broadcast_shape(self, ndim: int) -> Tuple[int, ...]:
        return (1, self.channels) + (1,) * (ndim - 2)

    def forward(self, x: Tensor) -> Tensor:
        shape = self._broadcast_shape(x.ndim)
        inv_std = 1.0 / np.sqrt(self.running_var + self.eps)
        centered = x - self.running_mean.reshape(shape)
        scale = self.weight * inv_std
        return centered * scale.reshape(*shape) + self.bias.reshape(*shape)

    def output_shape(self, shape: Shape) -> Shape:
        if shape[0] != self.channels:
            raise DimensionError(
                f"channel axis: frozen norm has {self.channels} channels, input has {shape[0]}"
            )
        return shape

    def set_statistics(self, mean: np.ndarray, var: np.ndarray) -> None:
        """Fixes the statistics once; used by model construction, never by editing."""
        self.running_mean = np.array(mean, dtype=np.float64)
        self.running_var = np.array(var, dtype=np.float64)

    def describe(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "channels": self.channels,
            "eps": self.eps,
            "running_mean": self.running_mean.tolist(),
            "running_var": self.running_var.tolist(),
        }


def layer_from_description(desc: Dict[str, Any], params: Dict[str, np.ndarray] = None) -> Layer:
    """Rebuilds a layer from ``describe()`` output; missing parameters start at zero."""
    params = params or {}
    kind = LayerKind(desc["kind"])
    if kind == LayerKind.DENSE:
        shape = (desc["out_features"], desc["in_features"])
        return Dense(
            params.get("weight", np.zeros(shape)),
            params.get("bias", np.zeros(shape[0])),
        )
    if kind == LayerKind.CONV2D:
        k = desc["kernel_size"]
        shape = (desc["out_channels"], desc["in_channels"], k, k)
        return Conv2D(
            params.get("weight", np.zeros(shape)),
            params.get("bias", np.zeros(shape[0])),
            stride=desc["stride"],
            pad=desc["pad"],
        )
    if kind == LayerKind.FROZEN_NORM:
        c = desc["channels"]
        return FrozenNorm(
            params.get("weight", np.ones(c)),
            params.get("bias", np.zeros(c)),
            np.array(desc["running_mean"], dtype=np.float64),
            np.array(desc["running_var"], dtype=np.float64),
            eps=desc["eps"],
        )
    if kind == LayerKind.RELU:
        return ReLU()
    return Flatten()
