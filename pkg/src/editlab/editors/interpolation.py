"""Weight-space interpolation between an original and an edited checkpoint."""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from ..exceptions.errors import ContractError
from ..network import Checkpoint, Network, accuracy, capture, interpolate
from ..shiftlab.datasets import LabeledData, SupervisedDataset
from .schema import EditConfig, EditTrace
from .supervised import edit_local_ft_supervised

logger = logging.getLogger(__name__)

DEFAULT_ALPHAS: Tuple[float, ...] = tuple(i / 10 for i in range(11))

EvalSet = Tuple[str, LabeledData]
PathLike = Union[str, Path]


@dataclass(frozen=True)
class CurveRow:
    alpha: float
    eval_name: str
    accuracy: float


@dataclass
class CurveTable:
    """Accuracy per (alpha, eval name), in sweep order."""

    rows: List[CurveRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def alphas(self) -> List[float]:
        seen: List[float] = []
        for r in self.rows:
            if r.alpha not in seen:
                seen.append(r.alpha)
        return seen

    @property
    def eval_names(self) -> List[str]:
        seen: List[str] = []
        for r in self.rows:
            if r.eval_name not in seen:
                seen.append(r.eval_name)
        return seen

    def value(self, alpha: float, eval_name: str) -> float:
        for r in self.rows:
            if r.alpha == alpha and r.eval_name == eval_name:
                return r.accuracy
        raise ContractError(f"no curve value for eval {eval_name!r} at alpha={alpha}")

    def series(self, eval_name: str) -> List[Tuple[float, float]]:
        """(alpha, accuracy) points of one eval set, ordered by alpha."""
        points = sorted((r.alpha, r.accuracy) for r in self.rows if r.eval_name == eval_name)
        if not points:
            raise ContractError(f"eval {eval_name!r} is not part of this sweep")
        return points

    def to_csv(self, path: PathLike, extra: Optional[Dict[str, object]] = None) -> None:
        extra = extra or {}
        fieldnames = list(extra) + ["alpha", "eval", "accuracy"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
            writer.writeheader()
            for r in self.rows:
                writer.writerow({**extra, "alpha": repr(r.alpha), "eval": r.eval_name, "accuracy": repr(r.accuracy)})

    @classmethod
    def from_rows(cls, rows: Iterable[Dict[str, str]]) -> "CurveTable":
        return cls([CurveRow(float(r["alpha"]), r["eval"], float(r["accuracy"])) for r in rows])


def _check_alphas(alphas: Sequence[float]) -> List[float]:
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ContractError("alpha grid is empty")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ContractError(f"alpha grid must be strictly increasing, got {alphas}")
    if 0.0 not in alphas or 1.0 not in alphas:
        raise ContractError("alpha grid must contain both endpoints 0 and 1")
    return alphas


def interpolation_sweep(
    orig: Checkpoint,
    edited: Checkpoint,
    alphas: Sequence[float],
    evals: Sequence[EvalSet],
) -> CurveTable:
    """Evaluates (1 - alpha) * orig + alpha * edited on every eval set for every alpha."""
    alphas = _check_alphas(alphas)
    table = CurveTable()
    for alpha in alphas:
        net = interpolate(orig, edited, alpha).to_network()
        for name, data in evals:
            table.rows.append(CurveRow(alpha, name, accuracy(net, data)))
    return table


def one_layer_interpolation(
    net: Network,
    data: SupervisedDataset,
    cfg: EditConfig,
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    evals: Sequence[EvalSet] = (),
    monitor: Optional[LabeledData] = None,
) -> Tuple[CurveTable, EditTrace]:
    """Fine-tunes layer ``cfg.layer`` alone, then sweeps the segment back to ``net``."""
    edited, trace = edit_local_ft_supervised(net, data, cfg, monitor)
    table = interpolation_sweep(capture(net), capture(edited), alphas, evals)
    logger.debug("interpolated layer %d over %d alphas and %d eval sets", cfg.layer, len(alphas), len(evals))
    return table, trace
