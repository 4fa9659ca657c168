from .enums import CorruptionFamily, RegionKind, ShapeKind, StyleKind
from .datasets import (
    BaseDataset,
    EditDataset,
    EditTriple,
    LabeledData,
    SupervisedDataset,
    TripleSet,
)
from .generator import MAX_CLASSES, class_signature, generate_base
from .edit_task import RegionSpec, generate_edit_task, render_style
from .splits import SplitPolicy, build_edit_dataset, make_remap_task, split_edit_dataset
from .corruptions import (
    SEVERITIES,
    SEVERITY_TABLE,
    ShiftSpec,
    corrupt,
    corrupt_dataset,
    corruption_grid,
    expand_shift_specs,
)
from .storage import load_dataset, read_manifest, save_dataset, write_manifest

__all__ = [
    "CorruptionFamily",
    "RegionKind",
    "ShapeKind",
    "StyleKind",
    "BaseDataset",
    "EditDataset",
    "EditTriple",
    "LabeledData",
    "SupervisedDataset",
    "TripleSet",
    "MAX_CLASSES",
    "class_signature",
    "generate_base",
    "RegionSpec",
    "generate_edit_task",
    "render_style",
    "SplitPolicy",
    "build_edit_dataset",
    "make_remap_task",
    "split_edit_dataset",
    "SEVERITIES",
    "SEVERITY_TABLE",
    "ShiftSpec",
    "corrupt",
    "corrupt_dataset",
    "corruption_grid",
    "expand_shift_specs",
    "load_dataset",
    "read_manifest",
    "save_dataset",
    "write_manifest",
]
