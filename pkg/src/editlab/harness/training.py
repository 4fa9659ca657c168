import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from ..network import Network, accuracy, calibrate_norms
from ..shiftlab.datasets import LabeledData
from ..tensorcore import SgdConfig, cross_entropy, sgd_step, zero_grad
from .schema import TrainingSection

logger = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_acc: float


def train_base(
    net: Network,
    train: LabeledData,
    val: LabeledData,
    cfg: TrainingSection,
    seed: int,
) -> List[EpochRecord]:
    """Trains every parameterized layer of ``net`` in place with shuffled mini-batches.

    FrozenNorm statistics are calibrated once on the first ``calibration_samples``
    training images before the first step and stay fixed afterwards.
    """
    rng = np.random.default_rng(seed)
    calibrate_norms(net, train.images[: cfg.calibration_samples])
    trainable = net.parameterized_indices
    net.set_trainable(trainable)
    params = net.param_groups(trainable)
    sgd_cfg = SgdConfig(learning_rate=cfg.learning_rate, momentum=cfg.momentum, weight_decay=cfg.weight_decay)

    history: List[EpochRecord] = []
    n = len(train)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for begin in range(0, n, cfg.batch_size):
            idx = order[begin : begin + cfg.batch_size]
            zero_grad(params)
            loss = cross_entropy(net.forward(train.images[idx]), train.labels[idx])
            loss.backward()
            sgd_step(params, sgd_cfg)
            total += loss.item() * len(idx)
        record = EpochRecord(epoch, total / n, accuracy(net, val))
        history.append(record)
        logger.debug("base epoch %d: loss %.4f, val acc %.4f", epoch, record.train_loss, record.val_acc)

    net.set_trainable([])
    logger.info(
        "trained %s for %d epochs: val acc %.4f", net.name, cfg.epochs, history[-1].val_acc
    )
    return history
