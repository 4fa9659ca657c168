import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..editors.enums import EditMethod
from ..editors.interpolation import DEFAULT_ALPHAS
from ..exceptions.errors import ConfigError, ContractError
from ..network.enums import ArchPreset
from ..network.presets import preset_editable_layers
from ..shiftlab.corruptions import ShiftSpec, expand_shift_specs
from ..shiftlab.edit_task import RegionSpec
from ..shiftlab.enums import StyleKind
from ..shiftlab.generator import MAX_CLASSES
from ..shiftlab.splits import SplitPolicy
from .enums import TaskKind


class DataSection(BaseModel):
    """Sizes of the procedural base task and the held-out editing pool."""

    class_count: int = Field(default=10, ge=2, le=MAX_CLASSES)
    samples_per_class: int = Field(default=60, ge=1)
    val_samples_per_class: int = Field(default=20, ge=1)
    edit_pool_per_class: int = Field(default=24, ge=1)
    image_size: int = Field(default=32, ge=8)

    model_config = ConfigDict(validate_assignment=True)


class EditTaskSection(BaseModel):
    """Which editing task to build from the pool and how to split it."""

    task: TaskKind = Field(default=TaskKind.REGION_SWAP)
    concept: str = "background"
    style: StyleKind = Field(default=StyleKind.SNOW)
    style_variants: int = Field(default=2, ge=1)
    min_region_fraction: float = Field(default=0.05, ge=0.0, lt=1.0)
    n_train: int = Field(default=10, ge=1)
    min_train_ratio: float = Field(default=0.5, gt=0.0, le=1.0)
    s_train: int = Field(default=1, ge=1)
    remap_classes: int = Field(default=4, ge=2)

    model_config = ConfigDict(validate_assignment=True)

    @field_validator("concept")
    @classmethod
    def ensure_region(cls, v: str) -> str:
        """Ensures the concept names a region kind (or a box)."""
        try:
            RegionSpec.parse(v)
        except (ValueError, ContractError) as e:
            raise ValueError(f"unknown concept region {v!r}: {e}")
        return v

    def region(self) -> RegionSpec:
        return RegionSpec.parse(self.concept)

    def split_policy(self, seed: int) -> SplitPolicy:
        return SplitPolicy(
            n_train=self.n_train,
            min_train_ratio=self.min_train_ratio,
            s_train=self.s_train,
            seed=seed,
        )


class ModelSection(BaseModel):
    preset: ArchPreset = Field(default=ArchPreset.CNN_SMALL)
    hidden: Optional[List[int]] = None

    model_config = ConfigDict(validate_assignment=True)


class TrainingSection(BaseModel):
    """Base-model training; the optimizer matches the editing protocol."""

    epochs: int = Field(default=20, ge=1)
    learning_rate: float = Field(default=0.05, gt=0.0)
    batch_size: int = Field(default=64, ge=1)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=1e-4, ge=0.0)
    calibration_samples: int = Field(default=256, ge=1)

    model_config = ConfigDict(validate_assignment=True)


class EditingSection(BaseModel):
    """Editor grid: every layer x learning rate x restart is one run.

    Unset ``lr_grid`` and ``restarts`` resolve to the per-method defaults.
    """

    method: EditMethod = Field(default=EditMethod.ONE_LAYER_INTERPOLATION)
    layers: List[int] = Field(default_factory=lambda: [8])
    lr_grid: Optional[List[float]] = None
    restarts: Optional[int] = Field(default=None, ge=1)
    rank: int = Field(default=1, ge=1)
    max_epochs: int = Field(default=2000, ge=1)
    early_stop_ratio: float = Field(default=0.5, ge=0.0, le=1.0)
    batch_size: Optional[int] = Field(default=None, ge=1)
    center_features: bool = False
    feature_source_size: int = Field(default=256, ge=1)
    monitor_original: bool = False

    model_config = ConfigDict(validate_assignment=True)

    @field_validator("layers")
    @classmethod
    def ensure_layers(cls, v: List[int]) -> List[int]:
        """Ensures the layer list is nonempty, positive and free of repeats."""
        if not v:
            raise ValueError("layers must not be empty")
        if any(layer < 1 for layer in v):
            raise ValueError(f"layers are numbered from 1, got {v}")
        if len(set(v)) != len(v):
            raise ValueError(f"layers repeat: {v}")
        return v

    @field_validator("lr_grid")
    @classmethod
    def ensure_lr_grid(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        """Ensures an explicit grid is nonempty and positive."""
        if v is None:
            return v
        if not v or any(lr <= 0 for lr in v):
            raise ValueError(f"lr_grid must be a nonempty list of positive rates, got {v}")
        return v


class ExperimentConfig(BaseModel):
    """Everything an experiment needs; all randomness derives from ``seed``."""

    data: DataSection = Field(default_factory=DataSection)
    edit_task: EditTaskSection = Field(default_factory=EditTaskSection)
    model: ModelSection = Field(default_factory=ModelSection)
    training: TrainingSection = Field(default_factory=TrainingSection)
    editing: EditingSection = Field(default_factory=EditingSection)
    alphas: List[float] = Field(default_factory=lambda: list(DEFAULT_ALPHAS))
    shifts: List[str] = Field(default_factory=list)
    output_dir: str = "runs/editlab"
    seed: int = Field(default=0, ge=0)
    jobs: int = Field(default=1, ge=1)
    render_graphics: bool = False

    model_config = ConfigDict(validate_assignment=True)

    @field_validator("alphas")
    @classmethod
    def ensure_alphas(cls, v: List[float]) -> List[float]:
        """Ensures the alpha grid is strictly increasing and holds both endpoints."""
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError(f"alphas must be strictly increasing, got {v}")
        if 0.0 not in v or 1.0 not in v:
            raise ValueError("alphas must include 0 and 1")
        return v

    @field_validator("shifts")
    @classmethod
    def ensure_shifts(cls, v: List[str]) -> List[str]:
        """Ensures every shift string parses (``family:severity``, ``family:*``, ``*:severity``)."""
        try:
            expand_shift_specs(v)
        except ContractError as e:
            raise ValueError(str(e))
        return v

    @model_validator(mode="after")
    def check_task_method(self) -> "ExperimentConfig":
        if self.edit_task.task == TaskKind.CLASS_REMAP and self.editing.method.uses_pairs:
            raise ValueError(
                f"method {self.editing.method.value} needs (x, x') pairs; "
                f"task {TaskKind.CLASS_REMAP.value} only has labels"
            )
        if self.edit_task.task == TaskKind.CLASS_REMAP and self.edit_task.remap_classes > self.data.class_count:
            raise ValueError("remap_classes exceeds class_count")
        return self

    @model_validator(mode="after")
    def check_model_layers(self) -> "ExperimentConfig":
        """Ensures the preset takes the image size and every edit layer is editable in it."""
        size = self.data.image_size
        try:
            editable = preset_editable_layers(self.model.preset, (3, size, size), self.model.hidden)
        except ContractError as e:
            raise ValueError(f"{self.model.preset.value} cannot take {size}x{size} images: {e}")
        bad = [layer for layer in self.editing.layers if layer not in editable]
        if bad:
            raise ValueError(
                f"layers {bad} are not editable in {self.model.preset.value}; editable layers are {editable}"
            )
        return self

    def shift_specs(self) -> List[ShiftSpec]:
        return expand_shift_specs(self.shifts)

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form, stable across runs."""
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def parse_config(raw: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config:\n{e}")


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    except ValueError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}")
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return parse_config(raw)
