from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions.errors import ContractError, DimensionError
from ..tensorcore import ParamGroup, Tensor, no_grad
from .layers import Layer, Shape, layer_from_description
from .enums import LayerKind

ArrayOrTensor = Union[np.ndarray, Tensor]

# Layers that end a block: the collision target of an edit is read just before them.
_BLOCK_STARTS = (LayerKind.DENSE, LayerKind.CONV2D, LayerKind.FLATTEN)


class Network:
    """Ordered layer list with 1-based layer numbering.

    ``forward_prefix(l, x)`` applies layers 1..l and ``forward_suffix(l, h)`` applies
    layers l+1..L, so their composition is the full forward pass for every l.
    """

    def __init__(self, layers: Sequence[Layer], input_shape: Shape, name: str = "custom"):
        self.layers: List[Layer] = list(layers)
        self.input_shape: Shape = tuple(int(s) for s in input_shape)
        self.name = name
        self.shapes: List[Shape] = [self.input_shape]
        for layer in self.layers:
            self.shapes.append(layer.output_shape(self.shapes[-1]))

    @property
    def L(self) -> int:
        return len(self.layers)

    @property
    def num_classes(self) -> int:
        return self.shapes[-1][0]

    def layer(self, index: int) -> Layer:
        self._check_index(index, low=1)
        return self.layers[index - 1]

    @property
    def editable_indices(self) -> List[int]:
        return [i for i, layer in enumerate(self.layers, start=1) if layer.is_editable]

    @property
    def parameterized_indices(self) -> List[int]:
        return [i for i, layer in enumerate(self.layers, start=1) if layer.is_parameterized]

    def feature_depth(self, index: int) -> int:
        """Depth at which an edit of layer ``index`` reads its output features.

        Follows the parameter-free or normalizing tail of the block (FrozenNorm,
        ReLU) so the collision target is post-nonlinearity.
        """
        self._check_index(index, low=1)
        depth = index
        while depth < self.L and self.layers[depth].kind not in _BLOCK_STARTS:
            depth += 1
        return depth

    def _check_index(self, l: int, low: int = 0) -> None:
        if not low <= l <= self.L:
            raise ContractError(f"layer index {l} outside [{low}, {self.L}]")

    # -- forward passes ---------------------------------------------------

    def forward_range(self, start: int, stop: int, h: ArrayOrTensor) -> Tensor:
        """Applies layers start+1..stop to ``h``, the output of layer ``start``."""
        self._check_index(start)
        self._check_index(stop)
        if stop < start:
            raise ContractError(f"empty range: stop {stop} precedes start {start}")
        h = h if isinstance(h, Tensor) else Tensor(h)
        expected = self.shapes[start]
        if h.shape[1:] != expected:
            raise DimensionError(
                f"input to layer {start + 1} must have per-sample shape {expected}, got {h.shape[1:]}"
            )
        for layer in self.layers[start:stop]:
            h = layer.forward(h)
        return h

    def forward(self, x: ArrayOrTensor) -> Tensor:
        return self.forward_range(0, self.L, x)

    def forward_prefix(self, l: int, x: ArrayOrTensor) -> Tensor:
        """f<=l(x); l = 0 returns x unchanged."""
        return self.forward_range(0, l, x)

    def forward_suffix(self, l: int, h: ArrayOrTensor) -> Tensor:
        """f>l(h); l = L returns h unchanged."""
        return self.forward_range(l, self.L, h)

    def features(
        self, start: int, stop: int, h: np.ndarray, batch_size: int = 256
    ) -> np.ndarray:
        """Untracked ``forward_range`` over a large array, evaluated in batches."""
        if len(h) == 0:
            return np.zeros((0,) + self.shapes[stop])
        chunks = []
        with no_grad():
            for begin in range(0, len(h), batch_size):
                chunks.append(self.forward_range(start, stop, h[begin : begin + batch_size]).data)
        return np.concatenate(chunks, axis=0)

    def logits(self, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
        return self.features(0, self.L, images, batch_size)

    # -- parameters -------------------------------------------------------

    def named_parameters(
        self, indices: Optional[Iterable[int]] = None
    ) -> List[Tuple[int, str, Tensor]]:
        """(layer index, parameter name, tensor) in canonical order."""
        wanted = None if indices is None else set(indices)
        out = []
        for i, layer in enumerate(self.layers, start=1):
            if wanted is not None and i not in wanted:
                continue
            for name, tensor in layer.parameters().items():
                out.append((i, name, tensor))
        return out

    def param_groups(self, indices: Iterable[int]) -> List[ParamGroup]:
        return [
            ParamGroup(f"layers.{i}.{name}", tensor)
            for i, name, tensor in self.named_parameters(indices)
        ]

    def set_trainable(self, indices: Iterable[int]) -> None:
        """Marks parameters of ``indices`` as requiring grad and freezes the rest."""
        wanted = set(indices)
        for i, _, tensor in self.named_parameters():
            tensor.requires_grad = i in wanted
            tensor.grad = None

    def copy(self) -> "Network":
        return Network([layer.copy() for layer in self.layers], self.input_shape, self.name)

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "input_shape": list(self.input_shape),
            "layers": [layer.describe() for layer in self.layers],
        }

    @classmethod
    def from_description(cls, desc: Dict[str, Any]) -> "Network":
        layers = [layer_from_description(d) for d in desc["layers"]]
        return cls(layers, tuple(desc["input_shape"]), desc.get("name", "custom"))
