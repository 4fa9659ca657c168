"""Desk-scale reference architectures."""

import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions.errors import ContractError, DimensionError
from ..tensorcore import conv_output_size
from .enums import ArchPreset
from .layers import Conv2D, Dense, Flatten, FrozenNorm, Layer, ReLU
from .model import Network

logger = logging.getLogger(__name__)

DEFAULT_INPUT_SHAPE: Tuple[int, int, int] = (3, 32, 32)


def _he_normal(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


def _dense(rng: np.random.Generator, n_in: int, n_out: int) -> Dense:
    return Dense(_he_normal(rng, (n_out, n_in), n_in), np.zeros(n_out))


def _conv(rng: np.random.Generator, c_in: int, c_out: int, k: int, stride: int, pad: int) -> Conv2D:
    weight = _he_normal(rng, (c_out, c_in, k, k), c_in * k * k)
    return Conv2D(weight, np.zeros(c_out), stride=stride, pad=pad)


def _norm(channels: int) -> FrozenNorm:
    return FrozenNorm(np.ones(channels), np.zeros(channels), np.zeros(channels), np.ones(channels))


def build_mlp_small(
    rng: np.random.Generator,
    num_classes: int,
    input_shape: Sequence[int],
    hidden: Sequence[int] = (128, 64),
) -> List[Layer]:
    """Flatten -> Dense/ReLU stack -> Dense(num_classes). 1x28x28 input gives 784->128->64->C."""
    widths = [int(np.prod(input_shape))] + list(hidden)
    layers: List[Layer] = [Flatten()]
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        layers += [_dense(rng, n_in, n_out), ReLU()]
    layers.append(_dense(rng, widths[-1], num_classes))
    return layers


def _cnn_hidden(hidden: Sequence[int]) -> Tuple[int, int, int]:
    if len(hidden) != 3:
        raise ContractError(f"cnn-small takes hidden sizes (c1, c2, width), got {list(hidden)}")
    c1, c2, width = (int(v) for v in hidden)
    return c1, c2, width


def _cnn_feature_map(input_shape: Sequence[int]) -> Tuple[int, int]:
    """Spatial size after both strided convolutions; raises when a stride does not divide."""
    if len(input_shape) != 3:
        raise DimensionError(f"cnn-small expects [C, H, W] inputs, got {tuple(input_shape)}")
    _, height, width = input_shape
    h = conv_output_size(conv_output_size(height, 3, 3, 2, "height"), 3, 3, 0, "height")
    w = conv_output_size(conv_output_size(width, 3, 3, 2, "width"), 3, 3, 0, "width")
    return h, w


def build_cnn_small(
    rng: np.random.Generator,
    num_classes: int,
    input_shape: Sequence[int],
    hidden: Sequence[int] = (8, 16, 32),
) -> List[Layer]:
    """Two 3x3 conv blocks (conv, frozen norm, ReLU) and a two-layer dense head."""
    c1, c2, width = _cnn_hidden(hidden)
    channels = input_shape[0]
    h, w = _cnn_feature_map(input_shape)
    flat = c2 * h * w
    return [
        _conv(rng, channels, c1, 3, 3, 2),
        _norm(c1),
        ReLU(),
        _conv(rng, c1, c2, 3, 3, 0),
        _norm(c2),
        ReLU(),
        Flatten(),
        _dense(rng, flat, width),
        ReLU(),
        _dense(rng, width, num_classes),
    ]


def build_network(
    preset: Union[ArchPreset, str],
    num_classes: int,
    seed: int,
    input_shape: Sequence[int] = DEFAULT_INPUT_SHAPE,
    hidden: Optional[Sequence[int]] = None,
) -> Network:
    """Builds a freshly initialized preset network (He-normal weights, zero biases)."""
    preset = ArchPreset(preset)
    if num_classes < 2:
        raise ContractError(f"need at least 2 classes, got {num_classes}")
    rng = np.random.default_rng(seed)
    input_shape = tuple(int(s) for s in input_shape)
    if preset == ArchPreset.MLP_SMALL:
        layers = build_mlp_small(rng, num_classes, input_shape, hidden or (128, 64))
    else:
        layers = build_cnn_small(rng, num_classes, input_shape, hidden or (8, 16, 32))
    net = Network(layers, input_shape, name=preset.value)
    logger.debug("built %s with %d layers, editable %s", preset.value, net.L, net.editable_indices)
    return net


def preset_editable_layers(
    preset: Union[ArchPreset, str],
    input_shape: Sequence[int] = DEFAULT_INPUT_SHAPE,
    hidden: Optional[Sequence[int]] = None,
) -> List[int]:
    """Editable layer numbers of a preset for ``input_shape``, without drawing any weights.

    Raises the same errors as ``build_network`` when the input does not fit the preset.
    """
    preset = ArchPreset(preset)
    if preset == ArchPreset.MLP_SMALL:
        return [2 * i for i in range(1, len(hidden or (128, 64)) + 2)]
    _cnn_hidden(hidden or (8, 16, 32))
    _cnn_feature_map(input_shape)
    return [1, 4, 8, 10]


def calibrate_norms(net: Network, images: np.ndarray, batch_size: int = 256) -> None:
    """Sets every FrozenNorm's statistics from ``images``, front to back.

    Called once on a fresh network; editing never touches the statistics again.
    """
    if len(images) == 0:
        raise ContractError("cannot calibrate normalization on an empty image set")
    for index, layer in enumerate(net.layers, start=1):
        if not isinstance(layer, FrozenNorm):
            continue
        feats = net.features(0, index - 1, images, batch_size)
        axes = (0,) + tuple(range(2, feats.ndim))
        layer.set_statistics(feats.mean(axis=axes), feats.var(axis=axes))
