"""``editlab`` command line.

    editlab gen --config F --out D       generate base and editing datasets
    editlab train-base --config F        train the original model, save its checkpoint
    editlab edit --config F              run the edit grid and pick per-layer winners
    editlab sweep --config F             edit grid plus interpolation and robustness sweeps
    editlab report --in D                re-render plot data from D/curves.csv
    editlab config --defaults            print the default (or --preset) config as JSON
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from ..config import EditLabConfig
from ..exceptions.errors import EditLabError
from ..network import save_network
from ..shiftlab import save_dataset
from .defaults import PRESETS, resolve_config
from .report import rerender_report, write_history_csv
from .runner import ExperimentRunner, run_experiment, setup_logging
from .schema import ExperimentConfig, load_config, parse_config

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file (JSON)")
    common.add_argument("--preset", choices=sorted(PRESETS), help="start from a named preset config")
    common.add_argument("--seed", type=int, help="override the global seed")
    common.add_argument("--jobs", type=int, help="worker processes for the edit grid")
    common.add_argument("--out", help="override the output directory")
    common.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    common.add_argument("--log-file", help="write the log to this file instead of stderr")

    parser = argparse.ArgumentParser(
        prog="editlab",
        description="Desk-scale laboratory for neural network editing and robustness evaluation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", parents=[common], help="generate datasets")
    sub.add_parser("train-base", parents=[common], help="train the original model")
    sub.add_parser("edit", parents=[common], help="run the edit grid without sweeps")
    sub.add_parser("sweep", parents=[common], help="edit grid, interpolation and robustness sweeps")
    report = sub.add_parser("report", parents=[common], help="re-render plots from curves.csv")
    report.add_argument("--in", dest="in_dir", required=True, help="report directory of a finished run")
    report.add_argument("--graphics", action="store_true", help="also render SVG figures")
    config = sub.add_parser("config", parents=[common], help="print a config")
    config.add_argument("--defaults", action="store_true", help="print the fully resolved config")
    return parser


def resolve_args_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config from --config or --preset (default preset otherwise), with CLI overrides applied."""
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = PRESETS[args.preset or "default"].model_copy(deep=True)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.out is not None:
        overrides["output_dir"] = args.out
    if overrides:
        cfg = parse_config({**cfg.model_dump(), **overrides})
    return cfg


def settings_from_args(args: argparse.Namespace) -> EditLabConfig:
    return EditLabConfig(log_level="WARNING" if args.quiet else "INFO", log_path=args.log_file)


def cmd_gen(cfg: ExperimentConfig, settings: EditLabConfig) -> int:
    runner = ExperimentRunner(cfg, settings)
    out = Path(cfg.output_dir) / "data"
    for name, dataset in runner.generate_datasets().items():
        path = save_dataset(out / name, dataset)
        logger.info("saved %s to %s", name, path)
    return 0


def cmd_train_base(cfg: ExperimentConfig, settings: EditLabConfig) -> int:
    runner = ExperimentRunner(cfg, settings)
    data = runner.prepare_data()
    net = runner.build_model()
    history = runner.train_original(net, data)
    out = Path(cfg.output_dir)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    save_network(out / "checkpoints" / "original.bin", net, {"config_hash": runner.cfg.config_hash()})
    write_history_csv(out / "base_training.csv", history)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            setup_logging(settings_from_args(args))
            rerender_report(args.in_dir, graphics=args.graphics)
            return 0

        cfg = resolve_args_config(args)
        if args.command == "config":
            shown = resolve_config(cfg) if args.defaults else cfg
            print(json.dumps(shown.model_dump(mode="json"), indent=2, sort_keys=True))
            return 0

        settings = settings_from_args(args)
        if args.command == "gen":
            return cmd_gen(cfg, settings)
        if args.command == "train-base":
            return cmd_train_base(cfg, settings)
        run_experiment(cfg, settings, sweep=args.command == "sweep")
        return 0
    except EditLabError as e:
        print(f"editlab: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
