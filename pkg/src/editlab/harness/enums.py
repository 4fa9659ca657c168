from enum import Enum


class TaskKind(str, Enum):
    REGION_SWAP = "region_swap"
    CLASS_REMAP = "class_remap"
