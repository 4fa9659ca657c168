from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Set, Tuple

import numpy as np

from ..exceptions.errors import DimensionError


@dataclass
class LabeledData:
    """Images [N, C, H, W] in [0, 1] with integer labels [N]."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.images) != len(self.labels):
            raise DimensionError(
                f"sample axis: {len(self.images)} images but {len(self.labels)} labels"
            )

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, indices: Sequence[int]) -> "LabeledData":
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledData(self.images[indices], self.labels[indices])


@dataclass
class BaseDataset:
    """Procedurally generated classification data with per-image object masks."""

    images: np.ndarray
    labels: np.ndarray
    masks: np.ndarray
    image_ids: np.ndarray
    class_count: int
    generator_seed: int

    def __len__(self) -> int:
        return len(self.labels)

    def labeled(self) -> LabeledData:
        return LabeledData(self.images, self.labels)


@dataclass(frozen=True)
class EditTriple:
    """(x, x', y): x' is x with one region's texture replaced by a style."""

    x: np.ndarray
    x_prime: np.ndarray
    y: int
    image_id: int
    style_variant: int

    @property
    def key(self) -> Tuple[int, int]:
        return (self.image_id, self.style_variant)


@dataclass
class TripleSet:
    """Column-stacked edit triples."""

    x: np.ndarray
    x_prime: np.ndarray
    y: np.ndarray
    image_ids: np.ndarray
    style_variants: np.ndarray

    @classmethod
    def from_triples(cls, triples: Sequence[EditTriple]) -> "TripleSet":
        if not triples:
            return cls.empty()
        return cls(
            np.stack([t.x for t in triples]),
            np.stack([t.x_prime for t in triples]),
            np.array([t.y for t in triples], dtype=np.int64),
            np.array([t.image_id for t in triples], dtype=np.int64),
            np.array([t.style_variant for t in triples], dtype=np.int64),
        )

    @classmethod
    def empty(cls) -> "TripleSet":
        none = np.zeros(0, dtype=np.int64)
        return cls(np.zeros((0,)), np.zeros((0,)), none, none.copy(), none.copy())

    def __len__(self) -> int:
        return len(self.y)

    def keys(self) -> Set[Tuple[int, int]]:
        return set(zip(self.image_ids.tolist(), self.style_variants.tolist()))

    def edited(self) -> LabeledData:
        """The (x', y) view used for editing accuracy."""
        return LabeledData(self.x_prime, self.y)

    def clean(self) -> LabeledData:
        return LabeledData(self.x, self.y)


@dataclass
class SupervisedDataset:
    """(x, y) train/val pairs for the supervised editors."""

    train: LabeledData
    val: LabeledData
    provenance: Dict[str, Any] = field(default_factory=dict)


@dataclass
class EditDataset:
    """Train/val split of edit triples with provenance metadata."""

    train: TripleSet
    val: TripleSet
    provenance: Dict[str, Any] = field(default_factory=dict)

    def supervised(self) -> SupervisedDataset:
        return SupervisedDataset(self.train.edited(), self.val.edited(), dict(self.provenance))

    @property
    def classes(self) -> List[int]:
        return sorted(set(self.train.y.tolist()))
