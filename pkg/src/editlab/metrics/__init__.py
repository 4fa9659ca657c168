from .penalties import (
    PENALTY_COLUMNS,
    PenaltyReport,
    PenaltySummary,
    aggregate_penalties,
    build_penalty_report,
    edit_task_ood_penalty,
    orig_task_ood_penalty,
    write_penalties_csv,
    write_penalty_summary_csv,
)
from .curves import RobustnessPoint, count_inversions, is_monotone_within, robustness_curve

__all__ = [
    "PENALTY_COLUMNS",
    "PenaltyReport",
    "PenaltySummary",
    "aggregate_penalties",
    "build_penalty_report",
    "edit_task_ood_penalty",
    "orig_task_ood_penalty",
    "write_penalties_csv",
    "write_penalty_summary_csv",
    "RobustnessPoint",
    "count_inversions",
    "is_monotone_within",
    "robustness_curve",
]
