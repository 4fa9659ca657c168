from .enums import TaskKind
from .schema import (
    DataSection,
    EditingSection,
    EditTaskSection,
    ExperimentConfig,
    ModelSection,
    TrainingSection,
    load_config,
    parse_config,
)
from .defaults import PRESETS, quick_config, reference_config, resolve_config
from .seeds import SeedTree, derive_seed
from .training import EpochRecord, train_base
from .runner import (
    EditJob,
    EditRunRecord,
    ExperimentRunner,
    LayerResult,
    RunResult,
    run_experiment,
    select_winner,
)
from .report import emit_report, read_curves_csv, render_plot_data, rerender_report

__all__ = [
    "TaskKind",
    "DataSection",
    "EditingSection",
    "EditTaskSection",
    "ExperimentConfig",
    "ModelSection",
    "TrainingSection",
    "load_config",
    "parse_config",
    "PRESETS",
    "quick_config",
    "reference_config",
    "resolve_config",
    "SeedTree",
    "derive_seed",
    "EpochRecord",
    "train_base",
    "EditJob",
    "EditRunRecord",
    "ExperimentRunner",
    "LayerResult",
    "RunResult",
    "run_experiment",
    "select_winner",
    "emit_report",
    "read_curves_csv",
    "render_plot_data",
    "rerender_report",
]
