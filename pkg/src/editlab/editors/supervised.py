"""Supervised editors: fine-tune a span of layers with cross-entropy on (x, y) pairs."""

from abc import abstractmethod
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions.errors import ContractError
from ..network import Network
from ..shiftlab.datasets import LabeledData, SupervisedDataset
from ..tensorcore import Tensor, cross_entropy
from .base import BaseEditor
from .enums import EditMethod
from .schema import EditConfig, EditTrace


class SupervisedEditor(BaseEditor):
    def __init__(
        self,
        net: Network,
        data: SupervisedDataset,
        cfg: EditConfig,
        monitor: Optional[LabeledData] = None,
    ):
        super().__init__(net, cfg, monitor)
        for part, labeled in (("train", data.train), ("val", data.val)):
            if len(labeled) and (labeled.labels.min() < 0 or labeled.labels.max() >= self.net.num_classes):
                raise ContractError(
                    f"{part} labels must lie in [0, {self.net.num_classes}), got "
                    f"[{labeled.labels.min()}, {labeled.labels.max()}]"
                )
        trainable = self.trainable_layers()
        self.start = min(trainable) - 1
        self.net.set_trainable(trainable)
        self.params = self.net.param_groups(trainable)
        self.h = self.net.features(0, self.start, data.train.images)
        self.labels = data.train.labels
        self.prepare_evaluators(data.val, self.start)

    @abstractmethod
    def trainable_layers(self) -> List[int]:
        """Layers whose parameters the edit may change."""

    @property
    def train_size(self) -> int:
        return len(self.labels)

    def batch_loss(self, indices: np.ndarray) -> Tensor:
        logits = self.net.forward_range(self.start, self.net.L, self.h[indices])
        return cross_entropy(logits, self.labels[indices])


class LocalSupervisedEditor(SupervisedEditor):
    method = EditMethod.LOCAL_FT_SUPERVISED

    def trainable_layers(self) -> List[int]:
        self.check_editable(self.cfg.layer)
        return [self.cfg.layer]


class GlobalForwardEditor(SupervisedEditor):
    method = EditMethod.GLOBAL_FT_FORWARD

    def trainable_layers(self) -> List[int]:
        self.check_editable(self.cfg.layer)
        return [i for i in self.net.parameterized_indices if i >= self.cfg.layer]


class FullFineTuneEditor(SupervisedEditor):
    """Every parameterized layer trains; ``cfg.layer`` is ignored."""

    method = EditMethod.FULL_FT

    def trainable_layers(self) -> List[int]:
        return list(self.net.parameterized_indices)


def edit_local_ft_supervised(
    net: Network, data: SupervisedDataset, cfg: EditConfig, monitor: Optional[LabeledData] = None
) -> Tuple[Network, EditTrace]:
    editor = LocalSupervisedEditor(net, data, cfg, monitor)
    trace = editor.run()
    return editor.finish(), trace


def edit_global_ft_forward(
    net: Network, data: SupervisedDataset, cfg: EditConfig, monitor: Optional[LabeledData] = None
) -> Tuple[Network, EditTrace]:
    editor = GlobalForwardEditor(net, data, cfg, monitor)
    trace = editor.run()
    return editor.finish(), trace


def edit_full_ft(
    net: Network, data: SupervisedDataset, cfg: EditConfig, monitor: Optional[LabeledData] = None
) -> Tuple[Network, EditTrace]:
    """Fine-tunes the whole network; FrozenNorm statistics stay fixed."""
    editor = FullFineTuneEditor(net, data, cfg, monitor)
    trace = editor.run()
    return editor.finish(), trace
