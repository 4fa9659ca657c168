class EditLabError(Exception):
    """Base exception for all editlab errors."""


class ContractError(EditLabError):
    """Raised when an operation is called outside its preconditions."""


class DimensionError(ContractError):
    """Raised when tensor shapes do not line up."""


class LayoutMismatchError(ContractError):
    """Raised when two checkpoints do not share a parameter layout."""


class EditDivergenceError(EditLabError):
    """Raised when an editing loss becomes non-finite or explodes."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class ConfigError(EditLabError):
    """Raised when an experiment configuration is invalid."""


class CheckpointFormatError(EditLabError):
    """Raised when a checkpoint file cannot be decoded."""


class ReportError(EditLabError):
    """Raised when report files cannot be written or read."""
