from .enums import ArchPreset, LayerKind
from .layers import Conv2D, Dense, Flatten, FrozenNorm, Layer, ReLU, layer_from_description
from .model import Network
from .presets import build_network, calibrate_norms, preset_editable_layers
from .checkpoint import (
    Checkpoint,
    LayoutEntry,
    capture,
    changed_layers,
    checkpoint_distance,
    interpolate,
    load_checkpoint,
    load_network,
    read_tensor_file,
    save_checkpoint,
    save_network,
    write_tensor_file,
)
from .evaluation import accuracy, accuracy_from_logits

__all__ = [
    "ArchPreset",
    "LayerKind",
    "Conv2D",
    "Dense",
    "Flatten",
    "FrozenNorm",
    "Layer",
    "ReLU",
    "layer_from_description",
    "Network",
    "build_network",
    "calibrate_norms",
    "preset_editable_layers",
    "Checkpoint",
    "LayoutEntry",
    "capture",
    "changed_layers",
    "checkpoint_distance",
    "interpolate",
    "load_checkpoint",
    "load_network",
    "read_tensor_file",
    "save_checkpoint",
    "save_network",
    "write_tensor_file",
    "accuracy",
    "accuracy_from_logits",
]
