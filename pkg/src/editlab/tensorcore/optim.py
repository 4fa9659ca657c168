"""SGD with momentum and name-gated weight decay."""

from dataclasses import dataclass, field
from typing import Iterable, List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..exceptions.errors import ContractError, DimensionError
from .tensor import Tensor


class SgdConfig(BaseModel):
    """Optimizer hyperparameters; defaults follow the editing protocol."""

    learning_rate: float = Field(ge=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=1e-4, ge=0.0)

    model_config = ConfigDict(validate_assignment=True)


@dataclass
class ParamGroup:
    """A named trainable tensor with its momentum buffer.

    Weight decay applies only when ``name`` contains ``"weight"``.
    """

    name: str
    tensor: Tensor
    momentum_buffer: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.momentum_buffer = np.zeros_like(self.tensor.data)

    @property
    def decays(self) -> bool:
        return "weight" in self.name


def zero_grad(params: Iterable[ParamGroup]) -> None:
    for p in params:
        p.tensor.zero_grad()


def sgd_step(params: List[ParamGroup], cfg: SgdConfig) -> None:
    """v <- momentum*v + g + decay*p (weight-class only); p <- p - lr*v."""
    for p in params:
        grad = p.tensor.grad
        if grad is None:
            raise ContractError(f"parameter {p.name!r} has no gradient")
        if p.momentum_buffer.shape != p.tensor.shape:
            raise DimensionError(
                f"momentum buffer of {p.name!r} has shape {p.momentum_buffer.shape}, "
                f"parameter has {p.tensor.shape}"
            )
        update = grad
        if p.decays and cfg.weight_decay:
            update = update + cfg.weight_decay * p.tensor.data
        p.momentum_buffer = cfg.momentum * p.momentum_buffer + update
        p.tensor.data = p.tensor.data - cfg.learning_rate * p.momentum_buffer
