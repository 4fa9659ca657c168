"""Procedural base classification task.

Each class is a distinct (shape, stripe orientation, palette) combination drawn on a
noisy background; samples jitter position, size, stripe phase and colors.
"""

import logging
from typing import Tuple

import numpy as np

from ..exceptions.errors import ContractError
from .datasets import BaseDataset
from .enums import ShapeKind

logger = logging.getLogger(__name__)

SHAPES = tuple(ShapeKind)
STRIPE_ANGLES = (0.0, 45.0, 90.0, 135.0)
PALETTES = (
    ((0.90, 0.25, 0.20), (0.95, 0.85, 0.30)),
    ((0.15, 0.35, 0.85), (0.55, 0.90, 0.95)),
    ((0.20, 0.70, 0.30), (0.05, 0.20, 0.10)),
    ((0.60, 0.20, 0.70), (0.95, 0.60, 0.80)),
)
MAX_CLASSES = len(SHAPES) * len(STRIPE_ANGLES) * 3
STRIPE_PERIOD = 6.0


def class_signature(label: int) -> Tuple[ShapeKind, float, int]:
    """(shape, stripe angle in degrees, palette index), unique for label < MAX_CLASSES."""
    shape = SHAPES[label % len(SHAPES)]
    angle = STRIPE_ANGLES[(label // len(SHAPES)) % len(STRIPE_ANGLES)]
    palette = (label + label // (len(SHAPES) * len(STRIPE_ANGLES))) % len(PALETTES)
    return shape, angle, palette


def shape_mask(shape: ShapeKind, dx: np.ndarray, dy: np.ndarray, r: float) -> np.ndarray:
    if shape == ShapeKind.DISK:
        return dx**2 + dy**2 <= r**2
    if shape == ShapeKind.SQUARE:
        return np.maximum(np.abs(dx), np.abs(dy)) <= 0.85 * r
    if shape == ShapeKind.DIAMOND:
        return np.abs(dx) + np.abs(dy) <= 1.2 * r
    if shape == ShapeKind.TRIANGLE:
        return (dy >= -r) & (dy <= 0.8 * r) & (np.abs(dx) <= 0.6 * (dy + r))
    dist = np.sqrt(dx**2 + dy**2)
    return (dist <= r) & (dist >= 0.55 * r)


def render_sample(
    label: int, rng: np.random.Generator, size: int = 32
) -> Tuple[np.ndarray, np.ndarray]:
    """One image [3, size, size] and its object mask [size, size]."""
    shape, angle, palette = class_signature(label)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    cx, cy = rng.uniform(0.38 * size, 0.62 * size, size=2)
    r = rng.uniform(0.24 * size, 0.32 * size)
    dx, dy = xx - cx, yy - cy
    mask = shape_mask(shape, dx, dy, r)

    theta = np.deg2rad(angle + rng.uniform(-8.0, 8.0))
    period = STRIPE_PERIOD * rng.uniform(0.9, 1.1)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    stripes = np.sin((dx * np.cos(theta) + dy * np.sin(theta)) * (2.0 * np.pi / period) + phase) > 0

    c1, c2 = (np.asarray(c) + rng.uniform(-0.06, 0.06, size=3) for c in PALETTES[palette])
    fg = np.where(stripes[None], c1[:, None, None], c2[:, None, None])
    level = rng.uniform(0.3, 0.6)
    tint = rng.uniform(-0.05, 0.05, size=3)
    bg = level + tint[:, None, None] + rng.normal(0.0, 0.03, size=(3, size, size))

    image = np.where(mask[None], fg, bg)
    return np.clip(image, 0.0, 1.0), mask


def generate_base(
    seed: int,
    class_count: int,
    samples_per_class: int,
    image_size: int = 32,
    id_offset: int = 0,
) -> BaseDataset:
    """Balanced procedural dataset, bit-reproducible from ``seed``.

    Samples are ordered class-interleaved (0, 1, ..., C-1, 0, 1, ...). ``id_offset``
    keeps image ids of separately generated pools disjoint.
    """
    if class_count < 2:
        raise ContractError(f"need at least 2 classes, got {class_count}")
    if class_count > MAX_CLASSES:
        raise ContractError(f"at most {MAX_CLASSES} distinct procedural classes, got {class_count}")
    if samples_per_class < 1:
        raise ContractError(f"samples_per_class must be positive, got {samples_per_class}")

    n = class_count * samples_per_class
    images = np.empty((n, 3, image_size, image_size))
    masks = np.empty((n, image_size, image_size), dtype=bool)
    labels = np.tile(np.arange(class_count, dtype=np.int64), samples_per_class)
    for i, seq in enumerate(np.random.SeedSequence(seed).spawn(n)):
        images[i], masks[i] = render_sample(int(labels[i]), np.random.default_rng(seq), image_size)
    logger.debug("generated %d samples over %d classes (seed %d)", n, class_count, seed)
    return BaseDataset(
        images=images,
        labels=labels,
        masks=masks,
        image_ids=np.arange(id_offset, id_offset + n, dtype=np.int64),
        class_count=class_count,
        generator_seed=seed,
    )
