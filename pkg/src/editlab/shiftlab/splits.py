import logging
from collections import defaultdict
from typing import Dict, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..exceptions.errors import ContractError
from .datasets import BaseDataset, EditDataset, EditTriple, LabeledData, SupervisedDataset, TripleSet

logger = logging.getLogger(__name__)


class SplitPolicy(BaseModel):
    """How edit triples are divided into train and validation sets."""

    n_train: int = Field(default=10, ge=1)
    min_train_ratio: float = Field(default=0.5, gt=0.0, le=1.0)
    s_train: int = Field(default=1, ge=1)
    seed: int = 0

    model_config = ConfigDict(validate_assignment=True)

    @property
    def min_images(self) -> float:
        return self.n_train / self.min_train_ratio

    def eligible(self, image_count: int) -> bool:
        return image_count >= self.min_images


def split_edit_dataset(
    triples: Sequence[EditTriple], policy: SplitPolicy
) -> Tuple[TripleSet, TripleSet]:
    """Per eligible class, ``n_train`` images contribute their training-variant triples.

    A class is eligible with at least n_train / min_train_ratio distinct images; other
    classes are dropped entirely. ``s_train`` style variants are drawn once for the
    whole task. Everything else from eligible classes goes to validation.
    """
    by_class: Dict[int, Dict[int, List[EditTriple]]] = defaultdict(lambda: defaultdict(list))
    for t in triples:
        by_class[t.y][t.image_id].append(t)

    variants = sorted({t.style_variant for t in triples})
    if policy.s_train > len(variants):
        raise ContractError(
            f"s_train={policy.s_train} exceeds the {len(variants)} available style variants"
        )
    eligible = [y for y in sorted(by_class) if policy.eligible(len(by_class[y]))]
    if not eligible:
        raise ContractError(
            f"no class has the {policy.min_images:g} images needed for n_train={policy.n_train}"
        )
    excluded = len(by_class) - len(eligible)
    if excluded:
        logger.info("excluded %d of %d classes below %g images", excluded, len(by_class), policy.min_images)

    rng = np.random.default_rng(policy.seed)
    train_variants = set(rng.choice(variants, size=policy.s_train, replace=False).tolist())
    train: List[EditTriple] = []
    val: List[EditTriple] = []
    for y in eligible:
        image_ids = sorted(by_class[y])
        chosen = set(rng.choice(image_ids, size=policy.n_train, replace=False).tolist())
        for image_id in image_ids:
            for t in by_class[y][image_id]:
                if image_id in chosen and t.style_variant in train_variants:
                    train.append(t)
                else:
                    val.append(t)

    order = lambda t: (t.image_id, t.style_variant)  # noqa: E731
    return TripleSet.from_triples(sorted(train, key=order)), TripleSet.from_triples(sorted(val, key=order))


def build_edit_dataset(triples: Sequence[EditTriple], policy: SplitPolicy, **provenance) -> EditDataset:
    train, val = split_edit_dataset(triples, policy)
    meta = policy.model_dump()
    meta.update(provenance)
    meta.update({"train_size": len(train), "val_size": len(val)})
    return EditDataset(train, val, meta)


def make_remap_task(
    base: BaseDataset, policy: SplitPolicy, remap_classes: int, mapping_seed: int
) -> SupervisedDataset:
    """Supervised task that relabels a held-out pool.

    ``remap_classes`` classes are drawn with ``mapping_seed`` and their labels shifted
    cyclically within the drawn set; only samples of those classes take part. The
    split follows ``policy`` (eligibility and ``n_train`` per class).
    """
    if not 2 <= remap_classes <= base.class_count:
        raise ContractError(f"remap_classes must lie in [2, {base.class_count}], got {remap_classes}")
    rng = np.random.default_rng(mapping_seed)
    drawn = sorted(rng.choice(base.class_count, size=remap_classes, replace=False).tolist())
    mapping = {c: drawn[(i + 1) % len(drawn)] for i, c in enumerate(drawn)}

    split_rng = np.random.default_rng(policy.seed)
    train_idx: List[int] = []
    val_idx: List[int] = []
    for c in drawn:
        members = np.flatnonzero(base.labels == c)
        if not policy.eligible(len(members)):
            continue
        chosen = set(split_rng.choice(members, size=policy.n_train, replace=False).tolist())
        for i in members.tolist():
            (train_idx if i in chosen else val_idx).append(i)
    if not train_idx:
        raise ContractError("no remapped class has enough samples for the split policy")

    relabel = np.array([mapping.get(int(y), int(y)) for y in base.labels], dtype=np.int64)
    train_idx.sort()
    val_idx.sort()
    return SupervisedDataset(
        LabeledData(base.images[train_idx], relabel[train_idx]),
        LabeledData(base.images[val_idx], relabel[val_idx]),
        {"mapping": {str(k): v for k, v in mapping.items()}, **policy.model_dump()},
    )
