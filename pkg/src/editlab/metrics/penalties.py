"""Out-of-distribution penalties of an edit.

The original-task penalty compares the edited and original models on shifted
original-task data. The editing-task penalty compares the edited model on shifted and
clean editing validation data. Both are plain accuracy differences in [-1, 1].
"""

import csv
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np

from ..exceptions.errors import ContractError
from ..network import Network, accuracy
from ..shiftlab.corruptions import ShiftSpec, corrupt_dataset
from ..shiftlab.datasets import LabeledData

PathLike = Union[str, Path]

PENALTY_COLUMNS = [
    "method",
    "layer",
    "seed",
    "shift_family",
    "severity",
    "acc_orig_clean",
    "acc_orig_shift_origmodel",
    "acc_orig_shift_edited",
    "acc_edit_clean",
    "acc_edit_shift",
    "orig_penalty",
    "edit_penalty",
]


def _nonempty(data: LabeledData, what: str) -> None:
    if len(data) == 0:
        raise ContractError(f"{what} is empty")


def orig_task_ood_penalty(f_edited: Network, f_orig: Network, shifted_orig_val: LabeledData) -> float:
    """Acc(f_edited, shifted orig) - Acc(f_orig, shifted orig)."""
    _nonempty(shifted_orig_val, "shifted original-task set")
    return accuracy(f_edited, shifted_orig_val) - accuracy(f_orig, shifted_orig_val)


def edit_task_ood_penalty(
    f_edited: Network, shifted_edit_val: LabeledData, clean_edit_val: LabeledData
) -> float:
    """Acc(f_edited, shifted edit val) - Acc(f_edited, clean edit val)."""
    _nonempty(shifted_edit_val, "shifted editing validation set")
    _nonempty(clean_edit_val, "clean editing validation set")
    return accuracy(f_edited, shifted_edit_val) - accuracy(f_edited, clean_edit_val)


@dataclass(frozen=True)
class PenaltyReport:
    """Component accuracies of one (edit, shift) evaluation; penalties derive from them."""

    method: str
    layer: int
    seed: int
    shift: ShiftSpec
    acc_orig_clean: float
    acc_orig_shift_origmodel: float
    acc_orig_shift_edited: float
    acc_edit_clean: float
    acc_edit_shift: float

    @property
    def orig_penalty(self) -> float:
        return self.acc_orig_shift_edited - self.acc_orig_shift_origmodel

    @property
    def edit_penalty(self) -> float:
        return self.acc_edit_shift - self.acc_edit_clean

    def to_row(self) -> Dict[str, object]:
        row = asdict(self)
        row.pop("shift")
        row.update(
            {
                "shift_family": self.shift.family.value,
                "severity": self.shift.severity,
                "orig_penalty": self.orig_penalty,
                "edit_penalty": self.edit_penalty,
            }
        )
        return row


def build_penalty_report(
    f_edited: Network,
    f_orig: Network,
    orig_val: LabeledData,
    edit_val: LabeledData,
    shift: ShiftSpec,
    method: str,
    layer: int,
    seed: int,
    corruption_seed: int = 0,
) -> PenaltyReport:
    """Corrupts both validation sets with ``shift`` and measures every component."""
    _nonempty(orig_val, "original-task validation set")
    _nonempty(edit_val, "editing validation set")
    shifted_orig = corrupt_dataset(orig_val, shift, corruption_seed)
    shifted_edit = corrupt_dataset(edit_val, shift, corruption_seed + 1)
    return PenaltyReport(
        method=method,
        layer=layer,
        seed=seed,
        shift=shift,
        acc_orig_clean=accuracy(f_edited, orig_val),
        acc_orig_shift_origmodel=accuracy(f_orig, shifted_orig),
        acc_orig_shift_edited=accuracy(f_edited, shifted_orig),
        acc_edit_clean=accuracy(f_edited, edit_val),
        acc_edit_shift=accuracy(f_edited, shifted_edit),
    )


@dataclass(frozen=True)
class PenaltySummary:
    """Mean and population standard deviation of both penalties at one severity."""

    severity: int
    count: int
    orig_penalty_mean: float
    orig_penalty_std: float
    edit_penalty_mean: float
    edit_penalty_std: float


def aggregate_penalties(reports: Sequence[PenaltyReport]) -> List[PenaltySummary]:
    """Averages over families (and runs) at each severity, lowest severity first."""
    by_severity: Dict[int, List[PenaltyReport]] = {}
    for r in reports:
        by_severity.setdefault(r.shift.severity, []).append(r)
    out = []
    for severity in sorted(by_severity):
        group = by_severity[severity]
        orig = np.array([r.orig_penalty for r in group])
        edit = np.array([r.edit_penalty for r in group])
        out.append(
            PenaltySummary(
                severity=severity,
                count=len(group),
                orig_penalty_mean=float(orig.mean()),
                orig_penalty_std=float(orig.std()),
                edit_penalty_mean=float(edit.mean()),
                edit_penalty_std=float(edit.std()),
            )
        )
    return out


def write_penalties_csv(path: PathLike, reports: Sequence[PenaltyReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=PENALTY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in reports:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.to_row().items()})


def write_penalty_summary_csv(path: PathLike, summaries: Sequence[PenaltySummary]) -> None:
    fieldnames = list(PenaltySummary.__dataclass_fields__)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for s in summaries:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in asdict(s).items()})
