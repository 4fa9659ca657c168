"""Dataset directories: a ``manifest.txt`` of key=value lines plus ``tensors.bin``.

The tensor file uses the checkpoint binary format; its header metadata repeats the
manifest so a directory can be reloaded from the tensor file alone.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from ..exceptions.errors import CheckpointFormatError
from ..network.checkpoint import read_tensor_file, write_tensor_file
from .datasets import BaseDataset, EditDataset, LabeledData, SupervisedDataset, TripleSet

logger = logging.getLogger(__name__)

MANIFEST = "manifest.txt"
TENSORS = "tensors.bin"

AnyDataset = Union[BaseDataset, EditDataset, SupervisedDataset]
PathLike = Union[str, Path]

_TRIPLE_FIELDS = ("x", "x_prime", "y", "image_ids", "style_variants")


def _format_value(value: Any) -> str:
    return value if isinstance(value, str) else json.dumps(value, sort_keys=True)


def write_manifest(path: PathLike, entries: Dict[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(entries):
            fh.write(f"{key}={_format_value(entries[key])}\n")


def read_manifest(path: PathLike) -> Dict[str, Any]:
    entries: Dict[str, Any] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise CheckpointFormatError(f"{path}: malformed manifest line {line!r}")
        try:
            entries[key] = json.loads(raw)
        except ValueError:
            entries[key] = raw
    return entries


def _arrays_of(dataset: AnyDataset) -> Tuple[str, List[Tuple[str, np.ndarray]], Dict[str, Any]]:
    if isinstance(dataset, BaseDataset):
        arrays = [
            ("images", dataset.images),
            ("labels", dataset.labels),
            ("masks", dataset.masks),
            ("image_ids", dataset.image_ids),
        ]
        meta = {
            "class_count": dataset.class_count,
            "generator_seed": dataset.generator_seed,
            "samples": len(dataset),
        }
        return "base", arrays, meta
    if isinstance(dataset, EditDataset):
        arrays = [
            (f"{part}.{name}", getattr(getattr(dataset, part), name))
            for part in ("train", "val")
            for name in _TRIPLE_FIELDS
        ]
        meta = dict(dataset.provenance)
        meta.update({"train_size": len(dataset.train), "val_size": len(dataset.val)})
        return "edit", arrays, meta
    arrays = [
        (f"{part}.{name}", getattr(getattr(dataset, part), name))
        for part in ("train", "val")
        for name in ("images", "labels")
    ]
    meta = dict(dataset.provenance)
    meta.update({"train_size": len(dataset.train), "val_size": len(dataset.val)})
    return "supervised", arrays, meta


def save_dataset(directory: PathLike, dataset: AnyDataset) -> Path:
    """Writes ``dataset`` into ``directory`` (created if missing)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    kind, arrays, meta = _arrays_of(dataset)
    meta = {"kind": kind, **meta}
    write_tensor_file(
        directory / TENSORS,
        [(0, name, np.asarray(a, dtype=np.float64)) for name, a in arrays],
        architecture_id=f"dataset:{kind}",
        metadata={"manifest": json.dumps(meta, sort_keys=True)},
    )
    write_manifest(directory / MANIFEST, meta)
    logger.info("saved %s dataset to %s", kind, directory)
    return directory


def _int(a: np.ndarray) -> np.ndarray:
    return np.rint(a).astype(np.int64)


def load_dataset(directory: PathLike) -> AnyDataset:
    directory = Path(directory)
    try:
        header, raw = read_tensor_file(directory / TENSORS)
        manifest = json.loads(header["metadata"]["manifest"])
    except OSError as e:
        raise CheckpointFormatError(f"{directory}: cannot read dataset: {e}")
    except (KeyError, ValueError) as e:
        raise CheckpointFormatError(f"{directory}: tensor file carries no dataset manifest: {e}")
    arrays = {name: a for _, name, a in raw}
    kind = manifest.pop("kind", None)
    try:
        if kind == "base":
            return BaseDataset(
                images=arrays["images"],
                labels=_int(arrays["labels"]),
                masks=arrays["masks"] > 0.5,
                image_ids=_int(arrays["image_ids"]),
                class_count=int(manifest["class_count"]),
                generator_seed=int(manifest["generator_seed"]),
            )
        if kind == "edit":
            parts = {}
            for part in ("train", "val"):
                x, x_prime, y, ids, variants = (arrays[f"{part}.{n}"] for n in _TRIPLE_FIELDS)
                parts[part] = TripleSet(x, x_prime, _int(y), _int(ids), _int(variants))
            return EditDataset(parts["train"], parts["val"], manifest)
        if kind == "supervised":
            parts = {
                part: LabeledData(arrays[f"{part}.images"], _int(arrays[f"{part}.labels"]))
                for part in ("train", "val")
            }
            return SupervisedDataset(parts["train"], parts["val"], manifest)
    except KeyError as e:
        raise CheckpointFormatError(f"{directory}: dataset is missing array {e}")
    raise CheckpointFormatError(f"{directory}: unknown dataset kind {kind!r}")
