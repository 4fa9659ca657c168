from .errors import (
    CheckpointFormatError,
    ConfigError,
    ContractError,
    DimensionError,
    EditDivergenceError,
    EditLabError,
    LayoutMismatchError,
    ReportError,
)

__all__ = [
    "CheckpointFormatError",
    "ConfigError",
    "ContractError",
    "DimensionError",
    "EditDivergenceError",
    "EditLabError",
    "LayoutMismatchError",
    "ReportError",
]
