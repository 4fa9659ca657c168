from typing import List, NamedTuple, Sequence

from ..editors.interpolation import CurveTable
from ..exceptions.errors import ContractError


class RobustnessPoint(NamedTuple):
    x: float
    y: float
    alpha: float


def robustness_curve(sweep: CurveTable, id_eval: str, ood_eval: str) -> List[RobustnessPoint]:
    """(in-distribution accuracy, shifted accuracy) pairs along the sweep, ordered by alpha."""
    names = sweep.eval_names
    for name in (id_eval, ood_eval):
        if name not in names:
            raise ContractError(f"eval {name!r} is missing from the sweep (have {names})")
    ood = dict(sweep.series(ood_eval))
    points = []
    for alpha, x in sweep.series(id_eval):
        if alpha not in ood:
            raise ContractError(f"eval {ood_eval!r} has no value at alpha={alpha}")
        points.append(RobustnessPoint(x, ood[alpha], alpha))
    if len(points) != len(ood):
        raise ContractError(f"evals {id_eval!r} and {ood_eval!r} cover different alphas")
    return points


def _steps_against(values: Sequence[float], increasing: bool) -> List[float]:
    """Size of every step that moves against the expected direction."""
    sign = 1.0 if increasing else -1.0
    drops = []
    for a, b in zip(values, values[1:]):
        change = sign * (b - a)
        if change < 0:
            drops.append(-change)
    return drops


def count_inversions(values: Sequence[float], increasing: bool = True, tolerance: float = 0.0) -> int:
    """Consecutive steps against the direction by more than ``tolerance``."""
    return sum(1 for d in _steps_against(values, increasing) if d > tolerance)


def is_monotone_within(
    values: Sequence[float],
    increasing: bool = True,
    max_inversions: int = 2,
    max_drop: float = 0.02,
) -> bool:
    """At most ``max_inversions`` backward steps, none larger than ``max_drop``."""
    drops = _steps_against(values, increasing)
    return len(drops) <= max_inversions and all(d <= max_drop for d in drops)
