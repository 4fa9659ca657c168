import numpy as np
from typing_extensions import Protocol

from ..exceptions.errors import ContractError
from .model import Network


class Labeled(Protocol):
    images: np.ndarray
    labels: np.ndarray


def accuracy_from_logits(logits: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax equals the label; ties go to the lowest class."""
    if len(labels) == 0:
        raise ContractError("accuracy of an empty dataset is undefined")
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def accuracy(net: Network, data: Labeled, batch_size: int = 256) -> float:
    if len(data.labels) == 0:
        raise ContractError("accuracy of an empty dataset is undefined")
    return accuracy_from_logits(net.logits(data.images, batch_size), np.asarray(data.labels))
