from enum import Enum


class LayerKind(str, Enum):
    DENSE = "dense"
    CONV2D = "conv2d"
    RELU = "relu"
    FROZEN_NORM = "frozen_norm"
    FLATTEN = "flatten"


class ArchPreset(str, Enum):
    MLP_SMALL = "mlp-small"
    CNN_SMALL = "cnn-small"
