from typing import Dict, List

from ..editors.enums import EditMethod
from ..network.enums import ArchPreset
from .schema import (
    DataSection,
    EditingSection,
    EditTaskSection,
    ExperimentConfig,
    ModelSection,
    TrainingSection,
)

COLLISION_LR_GRID = [1e-3, 1e-2, 1e-1]
SUPERVISED_LR_GRID = [1e-4, 1e-3, 1e-2]
LOWRANK_LR_GRID = [1e-2, 1e-1, 1.0, 10.0, 100.0]

DEFAULT_LR_GRIDS: Dict[EditMethod, List[float]] = {
    EditMethod.LOCAL_FT_COLLISION: COLLISION_LR_GRID,
    EditMethod.GLOBAL_FT_COLLISION: COLLISION_LR_GRID,
    EditMethod.REWRITE: LOWRANK_LR_GRID,
    EditMethod.DIRECT_LOWRANK: LOWRANK_LR_GRID,
    EditMethod.LOCAL_FT_SUPERVISED: SUPERVISED_LR_GRID,
    EditMethod.GLOBAL_FT_FORWARD: SUPERVISED_LR_GRID,
    EditMethod.FULL_FT: SUPERVISED_LR_GRID,
    EditMethod.ONE_LAYER_INTERPOLATION: SUPERVISED_LR_GRID,
}

LOWRANK_RESTARTS = 10


def default_lr_grid(method: EditMethod) -> List[float]:
    return list(DEFAULT_LR_GRIDS[EditMethod(method)])


def default_restarts(method: EditMethod) -> int:
    return LOWRANK_RESTARTS if EditMethod(method).is_lowrank else 1


def resolve_editing(section: EditingSection) -> EditingSection:
    """Copy of ``section`` with ``lr_grid`` and ``restarts`` filled from the method defaults."""
    resolved = section.model_copy(deep=True)
    if resolved.lr_grid is None:
        resolved.lr_grid = default_lr_grid(resolved.method)
    if resolved.restarts is None:
        resolved.restarts = default_restarts(resolved.method)
    return resolved


def resolve_config(cfg: ExperimentConfig) -> ExperimentConfig:
    resolved = cfg.model_copy(deep=True)
    resolved.editing = resolve_editing(cfg.editing)
    return resolved


quick_config = ExperimentConfig(
    data=DataSection(class_count=4, samples_per_class=30, val_samples_per_class=10, edit_pool_per_class=20),
    edit_task=EditTaskSection(style_variants=1, n_train=5),
    model=ModelSection(preset=ArchPreset.MLP_SMALL, hidden=[32, 16]),
    training=TrainingSection(epochs=5, learning_rate=0.02, batch_size=32, calibration_samples=64),
    editing=EditingSection(
        method=EditMethod.LOCAL_FT_COLLISION,
        layers=[4],
        lr_grid=[1e-2, 1e-1],
        restarts=1,
        max_epochs=20,
        feature_source_size=64,
    ),
    alphas=[0.0, 0.5, 1.0],
    shifts=["gaussian_noise:3"],
    output_dir="runs/quick",
)

reference_config = ExperimentConfig(
    data=DataSection(class_count=10, samples_per_class=60, val_samples_per_class=20, edit_pool_per_class=24),
    edit_task=EditTaskSection(style_variants=2),
    model=ModelSection(preset=ArchPreset.CNN_SMALL),
    training=TrainingSection(epochs=20),
    editing=EditingSection(
        method=EditMethod.ONE_LAYER_INTERPOLATION,
        layers=[8, 10],
        lr_grid=[1e-3, 1e-2, 1e-1],
        restarts=1,
        max_epochs=200,
    ),
    shifts=["*:3"],
    output_dir="runs/reference",
)

PRESETS: Dict[str, ExperimentConfig] = {
    "default": ExperimentConfig(),
    "quick": quick_config,
    "reference": reference_config,
}
