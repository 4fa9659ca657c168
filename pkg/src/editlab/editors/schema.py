import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..exceptions.errors import CheckpointFormatError, DimensionError
from ..network import Network, read_tensor_file, write_tensor_file
from ..network.layers import Conv2D
from ..tensorcore import SgdConfig
from .enums import StopReason

PathLike = Union[str, Path]


class EditConfig(BaseModel):
    """Settings for one editor call: one layer, one learning rate, one seed."""

    layer: int = Field(ge=1)
    learning_rate: float = Field(ge=0.0)
    max_epochs: int = Field(default=10000, ge=1)
    early_stop_ratio: float = Field(default=0.5, ge=0.0, le=1.0)
    rank: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    batch_size: Optional[int] = Field(default=None, ge=1)
    center_features: bool = False
    init_scale: float = Field(default=1e-3, gt=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=1e-4, ge=0.0)

    model_config = ConfigDict(validate_assignment=True)

    def sgd(self) -> SgdConfig:
        return SgdConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
        )


@dataclass
class TraceRecord:
    epoch: int
    train_loss: float
    val_acc: float
    orig_val_acc: Optional[float] = None


@dataclass
class EditTrace:
    """Per-epoch optimization history; epoch 0 is the unedited starting point."""

    records: List[TraceRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_acc: float = float("-inf")
    best_train_loss: float = float("inf")
    stop_reason: StopReason = StopReason.MAX_EPOCHS

    def append(self, record: TraceRecord) -> bool:
        """Adds a record; returns True when it sets a new best.

        Equal val accuracies are broken by the lower train loss, so a run whose
        accuracy never moves still keeps its most converged epoch.
        """
        self.records.append(record)
        improved = record.val_acc > self.best_val_acc
        tied = record.val_acc == self.best_val_acc and record.train_loss < self.best_train_loss
        if improved or tied:
            self.best_val_acc = record.val_acc
            self.best_train_loss = record.train_loss
            self.best_epoch = record.epoch
            return True
        return False

    @property
    def epochs(self) -> int:
        return self.records[-1].epoch if self.records else 0

    @property
    def train_losses(self) -> List[float]:
        return [r.train_loss for r in self.records]

    @property
    def val_accs(self) -> List[float]:
        return [r.val_acc for r in self.records]

    @property
    def best(self) -> TraceRecord:
        return next(r for r in self.records if r.epoch == self.best_epoch)

    @property
    def monitored(self) -> bool:
        return any(r.orig_val_acc is not None for r in self.records)

    def to_csv(self, path: PathLike) -> None:
        fieldnames = ["epoch", "train_loss", "val_acc"]
        if self.monitored:
            fieldnames.append("orig_val_acc")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n")
            writer.writeheader()
            for r in self.records:
                writer.writerow(
                    {
                        "epoch": r.epoch,
                        "train_loss": repr(r.train_loss),
                        "val_acc": repr(r.val_acc),
                        "orig_val_acc": "" if r.orig_val_acc is None else repr(r.orig_val_acc),
                    }
                )


@dataclass
class LowRankUpdate:
    """W_l <- W_l + U V^T. For a conv layer the product is the 1x1 kernel at the center tap."""

    layer: int
    U: np.ndarray
    V: np.ndarray

    def __post_init__(self) -> None:
        if self.U.ndim != 2 or self.V.ndim != 2 or self.U.shape[1] != self.V.shape[1]:
            raise DimensionError(
                f"rank axis: U {self.U.shape} and V {self.V.shape} must share a column count"
            )

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    @property
    def delta(self) -> np.ndarray:
        return self.U @ self.V.T

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.delta, compute_uv=False)

    def numerical_rank(self, rtol: float = 1e-10) -> int:
        s = self.singular_values()
        if s.size == 0 or s[0] == 0.0:
            return 0
        return int(np.sum(s >= rtol * s[0]))

    def kernel_delta(self, kernel_size: int) -> np.ndarray:
        """The update as a KxK kernel: U V^T at the center tap, zeros elsewhere (odd K)."""
        c = (kernel_size - 1) // 2
        out = np.zeros(self.delta.shape + (kernel_size, kernel_size))
        out[:, :, c, c] = self.delta
        return out

    def apply_to(self, net: Network) -> None:
        """Merges the update into ``net``'s weight at ``layer`` in place; the bias is untouched."""
        layer = net.layer(self.layer)
        if self.delta.shape != layer.weight.shape[:2]:
            raise DimensionError(
                f"update {self.delta.shape} does not fit layer {self.layer} weight {layer.weight.shape}"
            )
        if isinstance(layer, Conv2D):
            layer.weight.data = layer.weight.data + self.kernel_delta(layer.kernel_size)
        else:
            layer.weight.data = layer.weight.data + self.delta

    def save(self, path: PathLike, architecture_id: str = "custom") -> None:
        write_tensor_file(
            path,
            [(self.layer, "lowrank.U", self.U), (self.layer, "lowrank.V", self.V)],
            architecture_id,
            metadata={"rank": self.rank, "layer": self.layer},
        )

    @classmethod
    def load(cls, path: PathLike) -> "LowRankUpdate":
        _, arrays = read_tensor_file(path)
        named = {name: (layer, a) for layer, name, a in arrays}
        if set(named) != {"lowrank.U", "lowrank.V"}:
            raise CheckpointFormatError(f"{path}: not a low-rank update file")
        layer, U = named["lowrank.U"]
        _, V = named["lowrank.V"]
        return cls(layer, U, V)
