"""CSV tables, tab-separated plot data and optional SVG figures for a finished run.

Plot data is derived from ``curves.csv`` alone, so ``render_plot_data`` re-run on a
report directory reproduces the same files byte for byte.
"""

import csv
import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Tuple, Union

from ..editors import CurveRow, CurveTable
from ..exceptions.errors import ReportError
from ..metrics import (
    aggregate_penalties,
    robustness_curve,
    write_penalties_csv,
    write_penalty_summary_csv,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
CurveKey = Tuple[str, int]

CURVE_COLUMNS = ["method", "layer", "alpha", "eval", "accuracy"]
SUMMARY_COLUMNS = [
    "method",
    "layer",
    "lr",
    "restart",
    "seed",
    "best_val_acc",
    "best_epoch",
    "stop_reason",
    "weight_distance",
    "orig_val_acc_original",
    "orig_val_acc_edited",
    "edit_val_acc_original",
    "edit_val_acc_edited",
]
RUN_COLUMNS = [
    "method",
    "layer",
    "lr",
    "restart",
    "seed",
    "best_val_acc",
    "best_epoch",
    "epochs",
    "stop_reason",
    "diverged",
]

ID_EVALS = ("orig_val", "edit_val")
PLOT_FILES = ("accuracy_vs_alpha", "ood_vs_alpha", "ood_vs_id")


@contextmanager
def _writing(path: Path) -> Iterator[None]:
    try:
        yield
    except OSError as e:
        raise ReportError(f"cannot write {path}: {e}")
    logger.info("wrote %s", path)


def _ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ReportError(f"cannot create {path}: {e}")
    return path


def _fmt(value: object) -> object:
    return repr(value) if isinstance(value, float) else value


def _write_rows(path: Path, fieldnames: Sequence[str], rows: Sequence[Dict[str, object]], delimiter: str = ",") -> None:
    with _writing(path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(fieldnames), delimiter=delimiter, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _fmt(v) for k, v in row.items()})


def write_curves_csv(path: PathLike, curves: Dict[CurveKey, CurveTable]) -> None:
    rows = []
    for (method, layer), table in curves.items():
        for r in table.rows:
            rows.append(
                {"method": method, "layer": layer, "alpha": r.alpha, "eval": r.eval_name, "accuracy": r.accuracy}
            )
    _write_rows(Path(path), CURVE_COLUMNS, rows)


def read_curves_csv(path: PathLike) -> Dict[CurveKey, CurveTable]:
    """Curve tables keyed by (method, layer), in file order."""
    path = Path(path)
    curves: Dict[CurveKey, CurveTable] = {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                key = (row["method"], int(row["layer"]))
                curves.setdefault(key, CurveTable()).rows.append(
                    CurveRow(float(row["alpha"]), row["eval"], float(row["accuracy"]))
                )
    except OSError as e:
        raise ReportError(f"cannot read {path}: {e}")
    except (KeyError, ValueError) as e:
        raise ReportError(f"{path} is not a curves table: {e}")
    return curves


def _curve_name(key: CurveKey, eval_name: str) -> str:
    method, layer = key
    return f"{method}/layer{layer}/{eval_name}"


def plot_series(curves: Dict[CurveKey, CurveTable]) -> Dict[str, List[Dict[str, object]]]:
    """Rows of every plot-data file; files with no series are left out."""
    files: Dict[str, List[Dict[str, object]]] = {name: [] for name in PLOT_FILES}
    for key, table in curves.items():
        for eval_name in table.eval_names:
            target = "ood_vs_alpha" if "@" in eval_name else "accuracy_vs_alpha"
            for alpha, acc in table.series(eval_name):
                files[target].append({"curve": _curve_name(key, eval_name), "x": alpha, "y": acc})
        for eval_name in table.eval_names:
            id_eval = eval_name.split("@", 1)[0]
            if "@" not in eval_name or id_eval not in table.eval_names:
                continue
            for point in robustness_curve(table, id_eval, eval_name):
                files["ood_vs_id"].append(
                    {"curve": _curve_name(key, eval_name), "x": point.x, "y": point.y, "alpha": point.alpha}
                )
    return {name: rows for name, rows in files.items() if rows}


def render_plot_data(curves: Dict[CurveKey, CurveTable], out_dir: PathLike) -> List[Path]:
    """Writes ``plots/<name>.tsv`` series files (columns curve, x, y[, alpha])."""
    plot_dir = _ensure_dir(Path(out_dir) / "plots")
    written = []
    for name, rows in plot_series(curves).items():
        path = plot_dir / f"{name}.tsv"
        fieldnames = ["curve", "x", "y", "alpha"] if name == "ood_vs_id" else ["curve", "x", "y"]
        _write_rows(path, fieldnames, rows, delimiter="\t")
        written.append(path)
    return written


_AXES = {
    "accuracy_vs_alpha": ("alpha", "accuracy"),
    "ood_vs_alpha": ("alpha", "shifted accuracy"),
    "ood_vs_id": ("clean accuracy", "shifted accuracy"),
}


def render_graphics(curves: Dict[CurveKey, CurveTable], out_dir: PathLike) -> List[Path]:
    """One SVG per plot-data file; skipped with a warning when matplotlib is missing."""
    try:
        import matplotlib
    except ImportError:
        logger.warning("matplotlib is not installed; skipping figures (install editlab[plots])")
        return []
    matplotlib.use("Agg")
    matplotlib.rcParams.update({"font.family": "DejaVu Sans", "svg.hashsalt": "editlab"})
    import matplotlib.pyplot as plt

    plot_dir = _ensure_dir(Path(out_dir) / "plots")
    written = []
    for name, rows in plot_series(curves).items():
        by_curve: Dict[str, List[Tuple[float, float]]] = {}
        for row in rows:
            by_curve.setdefault(str(row["curve"]), []).append((float(row["x"]), float(row["y"])))
        fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
        for curve, points in by_curve.items():
            xs, ys = zip(*points)
            ax.plot(xs, ys, marker="o", markersize=3, label=curve)
        if name == "ood_vs_id":
            ax.plot([0, 1], [0, 1], color="grey", linestyle="--", linewidth=0.8)
        xlabel, ylabel = _AXES[name]
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize=6)
        path = plot_dir / f"{name}.svg"
        with _writing(path):
            fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


def _summary_row(layer_result) -> Dict[str, object]:
    winner = layer_result.winner
    job = winner.job
    row: Dict[str, object] = {
        "method": job.method.value,
        "layer": layer_result.layer,
        "lr": job.learning_rate,
        "restart": job.restart,
        "seed": job.seed,
        "best_val_acc": winner.best_val_acc,
        "best_epoch": winner.trace.best_epoch,
        "stop_reason": winner.trace.stop_reason.value,
        "weight_distance": layer_result.weight_distance,
    }
    table = layer_result.curves
    for eval_name in ID_EVALS:
        if eval_name in table.eval_names:
            row[f"{eval_name}_acc_original"] = table.value(0.0, eval_name)
            row[f"{eval_name}_acc_edited"] = table.value(1.0, eval_name)
        else:
            row[f"{eval_name}_acc_original"] = ""
            row[f"{eval_name}_acc_edited"] = ""
    return row


def emit_report(result, out_dir: PathLike) -> List[Path]:
    """Writes every table of ``result`` under ``out_dir`` and returns the written paths.

    Files: ``edit_runs.csv``, ``traces/<run>.csv``, ``summary.csv``, ``curves.csv``,
    ``provenance.json``, ``config.json``, ``penalties.csv`` and ``penalty_summary.csv``
    (only with shifts), ``plots/*.tsv`` and, when ``render_graphics`` is set, ``plots/*.svg``.
    """
    out = Path(out_dir)
    trace_dir = _ensure_dir(out / "traces")
    written: List[Path] = []

    path = out / "edit_runs.csv"
    _write_rows(path, RUN_COLUMNS, [r.summary() for r in result.runs])
    written.append(path)

    for record in result.runs:
        path = trace_dir / f"{record.job.name}.csv"
        with _writing(path):
            record.trace.to_csv(path)
        written.append(path)

    path = out / "summary.csv"
    _write_rows(path, SUMMARY_COLUMNS, [_summary_row(lr) for lr in result.layers])
    written.append(path)

    curves = {(lr.winner.job.method.value, lr.layer): lr.curves for lr in result.layers if len(lr.curves)}
    path = out / "curves.csv"
    write_curves_csv(path, curves)
    written.append(path)

    reports = [p for lr in result.layers for p in lr.penalties]
    if reports:
        path = out / "penalties.csv"
        with _writing(path):
            write_penalties_csv(path, reports)
        written.append(path)
        path = out / "penalty_summary.csv"
        with _writing(path):
            write_penalty_summary_csv(path, aggregate_penalties(reports))
        written.append(path)

    for name, payload in (
        ("provenance.json", result.provenance),
        ("config.json", result.config.model_dump(mode="json")),
    ):
        path = out / name
        with _writing(path):
            path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)

    written += render_plot_data(curves, out)
    if result.config.render_graphics:
        written += render_graphics(curves, out)
    return written


def rerender_report(in_dir: PathLike, graphics: bool = False) -> List[Path]:
    """Regenerates the plot files of a report directory from its ``curves.csv``."""
    in_dir = Path(in_dir)
    curves = read_curves_csv(in_dir / "curves.csv")
    written = render_plot_data(curves, in_dir)
    if graphics:
        written += render_graphics(curves, in_dir)
    return written


def write_history_csv(path: PathLike, history) -> Path:
    """Base-training history (epoch, train_loss, val_acc)."""
    path = Path(path)
    _write_rows(
        path,
        ["epoch", "train_loss", "val_acc"],
        [{"epoch": r.epoch, "train_loss": r.train_loss, "val_acc": r.val_acc} for r in history],
    )
    return path
