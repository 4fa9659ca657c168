"""Output-collision fine-tuning: make f<=l(x) match f<=l(x') for every edit pair."""

from abc import abstractmethod
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions.errors import ContractError
from ..network import Network
from ..shiftlab.datasets import EditDataset, LabeledData, TripleSet
from ..tensorcore import Tensor, mse
from .base import BaseEditor
from .enums import EditMethod
from .schema import EditConfig, EditTrace


def collision_loss(net: Network, layer: int, pairs: TripleSet, batch_size: int = 256) -> float:
    """Mean over pairs of (1/n_l) * ||f<=l(x) - f<=l(x')||^2 at the collision depth of ``layer``."""
    if len(pairs) == 0:
        raise ContractError("collision loss of an empty pair set is undefined")
    depth = net.feature_depth(layer)
    a = net.features(0, depth, pairs.x, batch_size)
    b = net.features(0, depth, pairs.x_prime, batch_size)
    return float(np.mean((a - b) ** 2))


class CollisionEditor(BaseEditor):
    """Trains ``trainable_layers`` on the collision MSE at the edit layer's feature depth."""

    def __init__(
        self,
        net: Network,
        pairs: EditDataset,
        cfg: EditConfig,
        monitor: Optional[LabeledData] = None,
    ):
        super().__init__(net, cfg, monitor)
        self.check_editable(cfg.layer)
        if len(pairs.train) == 0 or len(pairs.val) == 0:
            raise ContractError("collision editing needs nonempty train and val pairs")
        trainable = self.trainable_layers()
        self.depth = self.net.feature_depth(cfg.layer)
        self.start = min(trainable) - 1
        self.net.set_trainable(trainable)
        self.params = self.net.param_groups(trainable)
        self.h = self.net.features(0, self.start, pairs.train.x)
        self.h_prime = self.net.features(0, self.start, pairs.train.x_prime)
        self.prepare_evaluators(pairs.val.edited(), self.start)

    @abstractmethod
    def trainable_layers(self) -> List[int]:
        """Layers whose parameters the edit may change."""

    @property
    def train_size(self) -> int:
        return len(self.h)

    def batch_loss(self, indices: np.ndarray) -> Tensor:
        a = self.net.forward_range(self.start, self.depth, self.h[indices])
        b = self.net.forward_range(self.start, self.depth, self.h_prime[indices])
        return mse(a, b)


class LocalCollisionEditor(CollisionEditor):
    method = EditMethod.LOCAL_FT_COLLISION

    def trainable_layers(self) -> List[int]:
        return [self.cfg.layer]


class GlobalCollisionEditor(CollisionEditor):
    method = EditMethod.GLOBAL_FT_COLLISION

    def trainable_layers(self) -> List[int]:
        return [i for i in self.net.parameterized_indices if i <= self.cfg.layer]


def edit_local_ft_collision(
    net: Network, pairs: EditDataset, cfg: EditConfig, monitor: Optional[LabeledData] = None
) -> Tuple[Network, EditTrace]:
    """Fine-tunes W_l alone so edited inputs collide with their originals at layer l."""
    editor = LocalCollisionEditor(net, pairs, cfg, monitor)
    trace = editor.run()
    return editor.finish(), trace


def edit_global_ft_collision(
    net: Network, pairs: EditDataset, cfg: EditConfig, monitor: Optional[LabeledData] = None
) -> Tuple[Network, EditTrace]:
    """Fine-tunes every parameterized layer up to l on the same collision objective."""
    editor = GlobalCollisionEditor(net, pairs, cfg, monitor)
    trace = editor.run()
    return editor.finish(), trace
