from .enums import EditMethod, StopReason
from .schema import EditConfig, EditTrace, LowRankUpdate, TraceRecord
from .base import BaseEditor, CachedEvaluator, EarlyStopping, resolve_batch_size
from .collision import (
    GlobalCollisionEditor,
    LocalCollisionEditor,
    collision_loss,
    edit_global_ft_collision,
    edit_local_ft_collision,
)
from .lowrank import (
    DirectLowRankEditor,
    RewriteEditor,
    edit_direct_lowrank,
    edit_rewrite,
    lowrank_forward,
    rewrite_directions,
    second_moment,
)
from .supervised import (
    FullFineTuneEditor,
    GlobalForwardEditor,
    LocalSupervisedEditor,
    edit_full_ft,
    edit_global_ft_forward,
    edit_local_ft_supervised,
)
from .interpolation import (
    DEFAULT_ALPHAS,
    CurveRow,
    CurveTable,
    interpolation_sweep,
    one_layer_interpolation,
)

__all__ = [
    "EditMethod",
    "StopReason",
    "EditConfig",
    "EditTrace",
    "LowRankUpdate",
    "TraceRecord",
    "BaseEditor",
    "CachedEvaluator",
    "EarlyStopping",
    "resolve_batch_size",
    "GlobalCollisionEditor",
    "LocalCollisionEditor",
    "collision_loss",
    "edit_global_ft_collision",
    "edit_local_ft_collision",
    "DirectLowRankEditor",
    "RewriteEditor",
    "edit_direct_lowrank",
    "edit_rewrite",
    "lowrank_forward",
    "rewrite_directions",
    "second_moment",
    "FullFineTuneEditor",
    "GlobalForwardEditor",
    "LocalSupervisedEditor",
    "edit_full_ft",
    "edit_global_ft_forward",
    "edit_local_ft_supervised",
    "DEFAULT_ALPHAS",
    "CurveRow",
    "CurveTable",
    "interpolation_sweep",
    "one_layer_interpolation",
]
