from enum import Enum


class EditMethod(str, Enum):
    LOCAL_FT_COLLISION = "local_ft_collision"
    GLOBAL_FT_COLLISION = "global_ft_collision"
    REWRITE = "rewrite"
    DIRECT_LOWRANK = "direct_lowrank"
    LOCAL_FT_SUPERVISED = "local_ft_supervised"
    GLOBAL_FT_FORWARD = "global_ft_forward"
    FULL_FT = "full_ft"
    ONE_LAYER_INTERPOLATION = "one_layer_interpolation"

    @property
    def uses_pairs(self) -> bool:
        """Methods that need (x, x') pairs rather than (x, y) labels."""
        return self in (
            EditMethod.LOCAL_FT_COLLISION,
            EditMethod.GLOBAL_FT_COLLISION,
            EditMethod.REWRITE,
            EditMethod.DIRECT_LOWRANK,
        )

    @property
    def is_lowrank(self) -> bool:
        return self in (EditMethod.REWRITE, EditMethod.DIRECT_LOWRANK)


class StopReason(str, Enum):
    MAX_EPOCHS = "max_epochs"
    EARLY_STOP = "early_stop"
    DIVERGED = "diverged"
