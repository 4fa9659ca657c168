"""Parametric image corruptions with five severities per family."""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.ndimage import gaussian_filter

from ..exceptions.errors import ContractError, DimensionError
from .datasets import LabeledData
from .enums import CorruptionFamily

Seed = Union[int, np.random.SeedSequence]

SEVERITIES: Tuple[int, ...] = (1, 2, 3, 4, 5)

# Each row is strictly ordered so that distortion grows with severity.
SEVERITY_TABLE: Dict[CorruptionFamily, Tuple[float, ...]] = {
    CorruptionFamily.GAUSSIAN_NOISE: (0.04, 0.08, 0.12, 0.18, 0.26),
    CorruptionFamily.IMPULSE_NOISE: (0.01, 0.03, 0.06, 0.10, 0.17),
    CorruptionFamily.GAUSSIAN_BLUR: (0.4, 0.6, 0.9, 1.3, 1.8),
    CorruptionFamily.CONTRAST: (0.75, 0.6, 0.45, 0.3, 0.2),
    CorruptionFamily.BRIGHTNESS: (0.08, 0.16, 0.24, 0.32, 0.40),
    CorruptionFamily.PIXELATE: (0.8, 0.65, 0.5, 0.4, 0.3),
}


@dataclass(frozen=True)
class ShiftSpec:
    family: CorruptionFamily
    severity: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", CorruptionFamily(self.family))
        if isinstance(self.severity, bool) or self.severity not in SEVERITIES:
            raise ContractError(f"severity must lie in 1..5, got {self.severity}")

    @classmethod
    def parse(cls, text: str) -> "ShiftSpec":
        """Parses ``family:severity``, e.g. ``gaussian_blur:3``."""
        family, sep, severity = text.strip().partition(":")
        if not sep:
            raise ContractError(f"shift spec must look like 'family:severity', got {text!r}")
        try:
            return cls(CorruptionFamily(family), int(severity))
        except ValueError:
            raise ContractError(f"unknown shift spec {text!r}")

    @property
    def parameter(self) -> float:
        return SEVERITY_TABLE[self.family][self.severity - 1]

    def __str__(self) -> str:
        return f"{self.family.value}:{self.severity}"


def corruption_grid(
    families: Optional[Iterable[Union[CorruptionFamily, str]]] = None,
    severities: Iterable[int] = SEVERITIES,
) -> List[ShiftSpec]:
    """Every (family, severity) combination, family-major."""
    families = list(CorruptionFamily) if families is None else [CorruptionFamily(f) for f in families]
    severities = list(severities)
    return [ShiftSpec(f, s) for f in families for s in severities]


def expand_shift_specs(texts: Sequence[str]) -> List[ShiftSpec]:
    """Parses shift strings, expanding ``family:*`` and ``*:severity``; duplicates dropped."""
    out: List[ShiftSpec] = []
    for text in texts:
        family, _, severity = text.strip().partition(":")
        try:
            if family == "*" and severity == "*":
                specs = corruption_grid()
            elif severity == "*":
                specs = corruption_grid([family])
            elif family == "*":
                specs = corruption_grid(severities=[int(severity)])
            else:
                specs = [ShiftSpec.parse(text)]
        except ValueError:
            raise ContractError(f"unknown shift spec {text!r}")
        out.extend(s for s in specs if s not in out)
    return out


def _pixelate(img: np.ndarray, factor: float) -> np.ndarray:
    """Block-averages to ``round(size * factor)`` cells per axis, then expands back."""

    def cells(size: int) -> Tuple[np.ndarray, np.ndarray]:
        small = max(1, int(round(size * factor)))
        owner = (np.arange(size) * small) // size
        onehot = (owner[:, None] == np.arange(small)[None, :]).astype(np.float64)
        return onehot, onehot / onehot.sum(axis=0, keepdims=True)

    rows, row_avg = cells(img.shape[1])
    cols, col_avg = cells(img.shape[2])
    pooled = row_avg.T @ img @ col_avg
    return rows @ pooled @ cols.T


def corrupt(img: np.ndarray, spec: ShiftSpec, seed: Seed = 0) -> np.ndarray:
    """Applies one corruption to an image [C, H, W]; the result is clipped to [0, 1].

    Noise families draw from ``seed``; the others ignore it.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3:
        raise DimensionError(f"corrupt expects one image [C, H, W], got shape {img.shape}")
    p = spec.parameter
    family = spec.family
    if family == CorruptionFamily.GAUSSIAN_NOISE:
        out = img + np.random.default_rng(seed).normal(0.0, p, size=img.shape)
    elif family == CorruptionFamily.IMPULSE_NOISE:
        rng = np.random.default_rng(seed)
        hit = rng.random(img.shape) < p
        salt = rng.random(img.shape) < 0.5
        out = np.where(hit, salt.astype(np.float64), img)
    elif family == CorruptionFamily.GAUSSIAN_BLUR:
        out = gaussian_filter(img, sigma=(0.0, p, p), mode="reflect")
    elif family == CorruptionFamily.CONTRAST:
        mean = img.mean(axis=(1, 2), keepdims=True)
        out = mean + (img - mean) * p
    elif family == CorruptionFamily.BRIGHTNESS:
        out = img + p
    else:
        out = _pixelate(img, p)
    return np.clip(out, 0.0, 1.0)


def corrupt_dataset(data: LabeledData, spec: ShiftSpec, seed: int = 0) -> LabeledData:
    """Corrupts every sample with its own seed derived from (seed, sample index)."""
    images = np.empty_like(data.images)
    for i, img in enumerate(data.images):
        images[i] = corrupt(img, spec, np.random.SeedSequence([seed, i]))
    return LabeledData(images, data.labels.copy())
