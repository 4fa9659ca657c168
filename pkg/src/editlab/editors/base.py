import logging
from abc import ABC, abstractmethod
from typing import Callable, Dict, List, Optional

import numpy as np

from ..exceptions.errors import ContractError, EditDivergenceError
from ..network import Network, accuracy_from_logits
from ..shiftlab.datasets import LabeledData
from ..tensorcore import ParamGroup, Tensor, no_grad, sgd_step, zero_grad
from .enums import EditMethod, StopReason
from .schema import EditConfig, EditTrace, TraceRecord

logger = logging.getLogger(__name__)

FULL_BATCH_LIMIT = 256
DEFAULT_BATCH_SIZE = 64
DIVERGENCE_FACTOR = 1e6


def resolve_batch_size(batch_size: Optional[int], n: int) -> int:
    """Full batch up to 256 samples, otherwise 64, unless set explicitly."""
    if batch_size is not None:
        return min(batch_size, n)
    return n if n <= FULL_BATCH_LIMIT else DEFAULT_BATCH_SIZE


class EarlyStopping:
    """Fires at the first value strictly below ``ratio`` times the best value so far."""

    def __init__(self, ratio: float):
        self.ratio = ratio
        self.best: Optional[float] = None

    def update(self, value: float) -> bool:
        if self.best is None or value > self.best:
            self.best = value
            return False
        return value < self.ratio * self.best


class CachedEvaluator:
    """Accuracy of a network whose layers 1..``start`` never change.

    The prefix features are computed once; each call only runs ``head`` (by default
    layers start+1..L) on them.
    """

    def __init__(
        self,
        net: Network,
        start: int,
        data: LabeledData,
        head: Optional[Callable[[Tensor], Tensor]] = None,
        batch_size: int = 256,
    ):
        if len(data) == 0:
            raise ContractError("cannot evaluate on an empty dataset")
        self.labels = data.labels
        self.batch_size = batch_size
        self.features = net.features(0, start, data.images, batch_size)
        self.head = head or (lambda h: net.forward_range(start, net.L, h))

    def __call__(self) -> float:
        chunks = []
        with no_grad():
            for begin in range(0, len(self.features), self.batch_size):
                chunks.append(self.head(Tensor(self.features[begin : begin + self.batch_size])).data)
        return accuracy_from_logits(np.concatenate(chunks, axis=0), self.labels)


class BaseEditor(ABC):
    """One SGD editing run on a private copy of ``net``.

    Subclasses choose the trainable parameters and the loss; the loop, early stopping,
    the divergence guard and the best-epoch snapshot are shared.
    """

    method: EditMethod

    def __init__(self, net: Network, cfg: EditConfig, monitor: Optional[LabeledData] = None):
        self.original = net
        self.net = net.copy()
        self.cfg = cfg
        self.monitor_data = monitor
        self.params: List[ParamGroup] = []
        self._val: Optional[CachedEvaluator] = None
        self._monitor: Optional[CachedEvaluator] = None

    def check_editable(self, layer: int) -> None:
        self.net._check_index(layer, low=1)
        if not self.net.layer(layer).is_editable:
            raise ContractError(
                f"layer {layer} ({self.net.layer(layer).kind.value}) is not editable; "
                f"editable layers are {self.net.editable_indices}"
            )

    @property
    @abstractmethod
    def train_size(self) -> int:
        """Number of training samples (pairs or labeled examples)."""

    @abstractmethod
    def batch_loss(self, indices: np.ndarray) -> Tensor:
        """Loss on the training samples at ``indices``, recorded for backward."""

    def full_loss(self) -> float:
        """Training loss over every sample, batch-weighted, without recording."""
        n = self.train_size
        step = resolve_batch_size(self.cfg.batch_size, n)
        total = 0.0
        with no_grad():
            for begin in range(0, n, step):
                idx = np.arange(begin, min(begin + step, n))
                total += self.batch_loss(idx).item() * len(idx)
        return total / n

    def val_accuracy(self) -> float:
        return self._val()

    def monitor_accuracy(self) -> Optional[float]:
        return None if self._monitor is None else self._monitor()

    def prepare_evaluators(
        self,
        val: LabeledData,
        frozen_prefix: int,
        head: Optional[Callable[[Tensor], Tensor]] = None,
    ) -> None:
        """Caches val (and monitor) features through the layers the edit never changes."""
        self._val = CachedEvaluator(self.net, frozen_prefix, val, head)
        if self.monitor_data is not None:
            self._monitor = CachedEvaluator(self.net, frozen_prefix, self.monitor_data, head)

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {p.name: p.tensor.data.copy() for p in self.params}

    def restore(self, state: Dict[str, np.ndarray]) -> None:
        for p in self.params:
            p.tensor.data = state[p.name].copy()

    def finish(self) -> Network:
        """Turns the best-epoch state into the returned network."""
        self.net.set_trainable([])
        return self.net

    def _record(self, trace: EditTrace, epoch: int, loss: float) -> bool:
        record = TraceRecord(epoch, loss, self.val_accuracy(), self.monitor_accuracy())
        return trace.append(record)

    def _diverged(self, loss: float, initial: float) -> bool:
        if not np.isfinite(loss):
            return True
        return initial > 0.0 and loss > DIVERGENCE_FACTOR * initial

    def run(self) -> EditTrace:
        cfg = self.cfg
        sgd_cfg = cfg.sgd()
        n = self.train_size
        if n == 0:
            raise ContractError("editing dataset has no training samples")
        batch = resolve_batch_size(cfg.batch_size, n)
        rng = np.random.default_rng(cfg.seed)

        trace = EditTrace()
        stopper = EarlyStopping(cfg.early_stop_ratio)
        initial = self.full_loss()
        if not np.isfinite(initial):
            trace.stop_reason = StopReason.DIVERGED
            raise EditDivergenceError("initial editing loss is not finite", trace)
        self._record(trace, 0, initial)
        stopper.update(trace.records[-1].val_acc)
        best_state = self.snapshot()

        for epoch in range(1, cfg.max_epochs + 1):
            order = rng.permutation(n)
            for begin in range(0, n, batch):
                zero_grad(self.params)
                loss = self.batch_loss(order[begin : begin + batch])
                if self._diverged(loss.item(), initial):
                    trace.stop_reason = StopReason.DIVERGED
                    raise EditDivergenceError(
                        f"{self.method.value}: loss {loss.item():.4g} at epoch {epoch} "
                        f"(initial {initial:.4g})",
                        trace,
                    )
                loss.backward()
                sgd_step(self.params, sgd_cfg)

            epoch_loss = self.full_loss()
            if self._diverged(epoch_loss, initial):
                trace.stop_reason = StopReason.DIVERGED
                raise EditDivergenceError(
                    f"{self.method.value}: loss {epoch_loss:.4g} after epoch {epoch} "
                    f"(initial {initial:.4g})",
                    trace,
                )
            if self._record(trace, epoch, epoch_loss):
                best_state = self.snapshot()
            if stopper.update(trace.records[-1].val_acc):
                trace.stop_reason = StopReason.EARLY_STOP
                break

        self.restore(best_state)
        logger.debug(
            "%s layer %d lr %g: best val %.4f at epoch %d of %d (%s)",
            self.method.value,
            cfg.layer,
            cfg.learning_rate,
            trace.best_val_acc,
            trace.best_epoch,
            trace.epochs,
            trace.stop_reason.value,
        )
        return trace
