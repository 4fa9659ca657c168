"""Region-swap editing tasks: replace one region of each image with a style texture."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from ..exceptions.errors import ContractError
from .datasets import BaseDataset, EditTriple
from .enums import RegionKind, StyleKind

logger = logging.getLogger(__name__)

_STYLE_INDEX = {style: i for i, style in enumerate(StyleKind)}


@dataclass(frozen=True)
class RegionSpec:
    """Which part of an image a concept occupies.

    ``box`` is (row0, col0, row1, col1), half-open, and only used by ``RegionKind.BOX``.
    """

    kind: RegionKind = RegionKind.OBJECT
    box: Optional[Tuple[int, int, int, int]] = None

    @classmethod
    def parse(cls, text: str) -> "RegionSpec":
        """``object``, ``background``, ``top_half``, ``bottom_half`` or ``box:r0,c0,r1,c1``."""
        kind, _, rest = text.partition(":")
        if RegionKind(kind) == RegionKind.BOX:
            coords = tuple(int(v) for v in rest.split(","))
            if len(coords) != 4:
                raise ContractError(f"box region needs 4 coordinates, got {rest!r}")
            return cls(RegionKind.BOX, coords)
        return cls(RegionKind(kind))

    def __str__(self) -> str:
        if self.kind == RegionKind.BOX:
            return "box:" + ",".join(str(v) for v in self.box)
        return self.kind.value

    def validate(self, size: int) -> None:
        if self.kind != RegionKind.BOX:
            return
        if self.box is None:
            raise ContractError("box region without coordinates")
        r0, c0, r1, c1 = (min(max(v, 0), size) for v in self.box)
        if r1 <= r0 or c1 <= c0:
            raise ContractError(f"box region {self.box} selects no pixels")

    def mask(self, object_mask: np.ndarray) -> np.ndarray:
        size = object_mask.shape[0]
        if self.kind == RegionKind.OBJECT:
            return object_mask.copy()
        if self.kind == RegionKind.BACKGROUND:
            return ~object_mask
        out = np.zeros_like(object_mask)
        if self.kind == RegionKind.TOP_HALF:
            out[: size // 2] = True
        elif self.kind == RegionKind.BOTTOM_HALF:
            out[size // 2 :] = True
        else:
            r0, c0, r1, c1 = self.box
            out[max(r0, 0) : r1, max(c0, 0) : c1] = True
        return out


def render_style(style: Union[StyleKind, str], variant: int, size: int = 32) -> np.ndarray:
    """Texture [3, size, size] for one variant of a style; variants differ in scale and colors."""
    style = StyleKind(style)
    rng = np.random.default_rng([_STYLE_INDEX[style], variant])
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    a = rng.uniform(0.0, 1.0, size=3)
    b = rng.uniform(0.0, 1.0, size=3)
    if style == StyleKind.CHECKER:
        cell = int(rng.integers(2, 6))
        pattern = ((yy // cell + xx // cell) % 2).astype(bool)
    elif style == StyleKind.DOTS:
        spacing = rng.uniform(4.0, 7.0)
        radius = spacing * rng.uniform(0.2, 0.35)
        pattern = ((yy % spacing) - spacing / 2) ** 2 + ((xx % spacing) - spacing / 2) ** 2 <= radius**2
    elif style == StyleKind.WAVES:
        freq = rng.uniform(0.25, 0.6)
        pattern = np.sin(xx * freq + 3.0 * np.sin(yy * freq * 0.5)) > 0
    elif style == StyleKind.GRAVEL:
        pattern = rng.random((size, size)) < 0.5
        a, b = a * 0.6, b * 0.6 + 0.2
    else:
        pattern = rng.random((size, size)) < rng.uniform(0.15, 0.35)
        a = np.full(3, 0.97)
        b = np.full(3, rng.uniform(0.55, 0.75))
    texture = np.where(pattern[None], a[:, None, None], b[:, None, None])
    return np.clip(texture, 0.0, 1.0)


def generate_edit_task(
    base: BaseDataset,
    concept: RegionSpec,
    style: Union[StyleKind, str],
    style_variants: int,
    min_region_fraction: float = 0.0,
) -> List[EditTriple]:
    """One triple per (selected image, style variant).

    Images whose region covers no pixels (or less than ``min_region_fraction`` of the
    image) are skipped and counted in a warning. Pixels outside the region of x' equal
    x exactly.
    """
    if style_variants < 1:
        raise ContractError(f"style_variants must be positive, got {style_variants}")
    size = base.images.shape[-1]
    concept.validate(size)
    textures = [render_style(style, v, size) for v in range(style_variants)]

    triples: List[EditTriple] = []
    skipped = 0
    for i in range(len(base)):
        mask = concept.mask(base.masks[i])
        coverage = mask.mean()
        if coverage == 0.0 or coverage < min_region_fraction:
            skipped += 1
            continue
        x = base.images[i]
        for v, texture in enumerate(textures):
            x_prime = np.where(mask[None], texture, x)
            triples.append(
                EditTriple(x, x_prime, int(base.labels[i]), int(base.image_ids[i]), v)
            )
    if skipped:
        logger.warning(
            "skipped %d of %d images whose %s region is empty or below %.3f coverage",
            skipped,
            len(base),
            concept,
            min_region_fraction,
        )
    if not triples:
        raise ContractError(f"region {concept} selected no pixels in any image")
    return triples
