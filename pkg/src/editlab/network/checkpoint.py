"""Flat weight vectors, weight-space interpolation and the binary tensor file format.

File layout (all integers little-endian)::

    b"EDLBTNSR" | u32 format version | u64 header length | header JSON | float64 payload

The JSON header holds the architecture id, the layout table and free-form metadata.
A key-value text sidecar (``<path>.meta``) repeats the metadata for humans.
"""

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from ..exceptions.errors import CheckpointFormatError, LayoutMismatchError
from .model import Network

logger = logging.getLogger(__name__)

MAGIC = b"EDLBTNSR"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")

PathLike = Union[str, Path]


class LayoutEntry(NamedTuple):
    layer: int
    name: str
    shape: Tuple[int, ...]
    offset: int

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 1


@dataclass
class Checkpoint:
    """All parameters of a network as one vector, plus the layout to unflatten it."""

    flat: np.ndarray
    layout: Tuple[LayoutEntry, ...]
    architecture: Dict[str, Any]

    @property
    def architecture_id(self) -> str:
        return self.architecture.get("name", "custom")

    def arrays(self) -> Dict[Tuple[int, str], np.ndarray]:
        return {
            (e.layer, e.name): self.flat[e.offset : e.offset + e.size].reshape(e.shape)
            for e in self.layout
        }

    def restore(self, net: Network) -> None:
        """Writes the stored values into ``net``'s parameters."""
        if _layout_of(net) != self.layout:
            raise LayoutMismatchError(
                f"checkpoint layout does not match network {net.name!r}"
            )
        for (_, _, tensor), entry in zip(net.named_parameters(), self.layout):
            tensor.data = self.flat[entry.offset : entry.offset + entry.size].reshape(entry.shape).copy()

    def to_network(self) -> Network:
        net = Network.from_description(self.architecture)
        self.restore(net)
        return net


def _layout_of(net: Network) -> Tuple[LayoutEntry, ...]:
    entries = []
    offset = 0
    for layer, name, tensor in net.named_parameters():
        entries.append(LayoutEntry(layer, name, tuple(tensor.shape), offset))
        offset += tensor.size
    return tuple(entries)


def capture(net: Network) -> Checkpoint:
    params = net.named_parameters()
    flat = np.concatenate([t.data.reshape(-1) for _, _, t in params]) if params else np.zeros(0)
    return Checkpoint(flat.copy(), _layout_of(net), net.describe())


def _check_compatible(a: Checkpoint, b: Checkpoint) -> None:
    if a.layout != b.layout:
        raise LayoutMismatchError("checkpoints have different parameter layouts")
    if a.architecture != b.architecture:
        raise LayoutMismatchError("checkpoints describe different architectures")


def interpolate(a: Checkpoint, b: Checkpoint, alpha: float) -> Checkpoint:
    """(1 - alpha) * a + alpha * b, elementwise over every parameter."""
    _check_compatible(a, b)
    if not 0.0 <= alpha <= 1.0:
        logger.warning("interpolating with alpha=%r outside [0, 1]", alpha)
    flat = (1.0 - alpha) * a.flat + alpha * b.flat
    return Checkpoint(flat, a.layout, a.architecture)


def checkpoint_distance(a: Checkpoint, b: Checkpoint) -> float:
    """Euclidean distance between two checkpoints in weight space."""
    _check_compatible(a, b)
    return float(np.linalg.norm(a.flat - b.flat))


def changed_layers(a: Checkpoint, b: Checkpoint) -> List[int]:
    """Layer indices whose parameters differ in any bit."""
    _check_compatible(a, b)
    changed = []
    for e in a.layout:
        sl = slice(e.offset, e.offset + e.size)
        if not np.array_equal(a.flat[sl], b.flat[sl]) and e.layer not in changed:
            changed.append(e.layer)
    return changed


# -- binary files ----------------------------------------------------------


def write_tensor_file(
    path: PathLike,
    arrays: List[Tuple[int, str, np.ndarray]],
    architecture_id: str,
    metadata: Optional[Dict[str, Any]] = None,
    architecture: Optional[Dict[str, Any]] = None,
) -> None:
    """Writes (layer, name, array) triples as one float64 payload with a JSON header."""
    path = Path(path)
    layout = []
    offset = 0
    for layer, name, array in arrays:
        layout.append({"layer": layer, "name": name, "shape": list(array.shape), "offset": offset})
        offset += int(array.size)
    metadata = dict(metadata or {})
    header = {
        "format_version": FORMAT_VERSION,
        "architecture_id": architecture_id,
        "layout": layout,
        "architecture": architecture,
        "metadata": metadata,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = (
        np.concatenate([np.asarray(a, dtype=np.float64).reshape(-1) for _, _, a in arrays])
        if arrays
        else np.zeros(0)
    )
    with open(path, "wb") as fh:
        fh.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload.astype("<f8").tobytes())

    sidecar = {
        "architecture_id": architecture_id,
        "format_version": FORMAT_VERSION,
        "tensor_count": len(arrays),
        "value_count": offset,
    }
    sidecar.update(metadata)
    with open(str(path) + ".meta", "w", encoding="utf-8") as fh:
        for key in sorted(sidecar):
            fh.write(f"{key}={sidecar[key]}\n")


def read_tensor_file(path: PathLike) -> Tuple[Dict[str, Any], List[Tuple[int, str, np.ndarray]]]:
    """Inverse of :func:`write_tensor_file`; returns (header, arrays)."""
    raw = Path(path).read_bytes()
    if len(raw) < _PREFIX.size:
        raise CheckpointFormatError(f"{path}: file too short for a tensor header")
    magic, version, header_len = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{path}: not an editlab tensor file")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported format version {version}")
    start = _PREFIX.size
    try:
        header = json.loads(raw[start : start + header_len].decode("utf-8"))
    except ValueError as e:
        raise CheckpointFormatError(f"{path}: corrupt header: {e}")
    payload = np.frombuffer(raw[start + header_len :], dtype="<f8").astype(np.float64)
    arrays = []
    for entry in header["layout"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        chunk = payload[entry["offset"] : entry["offset"] + size]
        if chunk.size != size:
            raise CheckpointFormatError(f"{path}: payload shorter than layout declares")
        arrays.append((entry["layer"], entry["name"], chunk.reshape(shape).copy()))
    return header, arrays


def save_checkpoint(path: PathLike, ckpt: Checkpoint, metadata: Optional[Dict[str, Any]] = None) -> None:
    arrays = [(layer, name, array) for (layer, name), array in ckpt.arrays().items()]
    write_tensor_file(path, arrays, ckpt.architecture_id, metadata, ckpt.architecture)


def load_checkpoint(path: PathLike) -> Checkpoint:
    header, arrays = read_tensor_file(path)
    if header.get("architecture") is None:
        raise CheckpointFormatError(f"{path}: no architecture description in header")
    flat = np.concatenate([a.reshape(-1) for _, _, a in arrays]) if arrays else np.zeros(0)
    layout = tuple(
        LayoutEntry(e["layer"], e["name"], tuple(e["shape"]), e["offset"]) for e in header["layout"]
    )
    return Checkpoint(flat, layout, header["architecture"])


def save_network(path: PathLike, net: Network, metadata: Optional[Dict[str, Any]] = None) -> None:
    save_checkpoint(path, capture(net), metadata)


def load_network(path: PathLike) -> Network:
    return load_checkpoint(path).to_network()
