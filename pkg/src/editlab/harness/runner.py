import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from ..config import EditLabConfig
from ..editors import (
    CurveTable,
    EditConfig,
    EditMethod,
    EditTrace,
    LowRankUpdate,
    StopReason,
    edit_direct_lowrank,
    edit_full_ft,
    edit_global_ft_collision,
    edit_global_ft_forward,
    edit_local_ft_collision,
    edit_local_ft_supervised,
    edit_rewrite,
    interpolation_sweep,
)
from ..exceptions.errors import ConfigError, ContractError, EditDivergenceError
from ..metrics import PenaltyReport, build_penalty_report
from ..network import (
    Checkpoint,
    Network,
    accuracy,
    build_network,
    capture,
    checkpoint_distance,
    save_checkpoint,
)
from ..shiftlab import (
    BaseDataset,
    EditDataset,
    LabeledData,
    ShiftSpec,
    SupervisedDataset,
    build_edit_dataset,
    corrupt_dataset,
    generate_base,
    generate_edit_task,
    make_remap_task,
)
from .defaults import resolve_config
from .enums import TaskKind
from .schema import ExperimentConfig, parse_config
from .seeds import SeedTree
from .training import EpochRecord, train_base

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def setup_logging(settings: EditLabConfig) -> None:
    logging.basicConfig(
        filename=settings.log_path,
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


@dataclass
class ExperimentData:
    """Everything the edit runs read; built once per experiment."""

    base_train: LabeledData
    base_val: LabeledData
    supervised: SupervisedDataset
    pairs: Optional[EditDataset] = None

    @property
    def edit_val(self) -> LabeledData:
        return self.supervised.val

    @property
    def feature_source(self) -> np.ndarray:
        return self.base_train.images


@dataclass
class EditJob:
    method: EditMethod
    layer: int
    lr_index: int
    learning_rate: float
    restart: int
    seed: int

    @property
    def key(self) -> Tuple[int, int, int]:
        return (self.layer, self.lr_index, self.restart)

    @property
    def name(self) -> str:
        return f"{self.method.value}_layer{self.layer}_lr{self.lr_index}_restart{self.restart}"


@dataclass
class EditRunRecord:
    """Outcome of one (layer, learning rate, restart) editor call."""

    job: EditJob
    trace: EditTrace
    diverged: bool = False
    message: str = ""
    edited: Optional[Checkpoint] = None
    update: Optional[LowRankUpdate] = None

    @property
    def best_val_acc(self) -> float:
        return self.trace.best_val_acc if self.trace.records else float("nan")

    def summary(self) -> Dict[str, Any]:
        return {
            "method": self.job.method.value,
            "layer": self.job.layer,
            "lr": self.job.learning_rate,
            "restart": self.job.restart,
            "seed": self.job.seed,
            "best_val_acc": self.best_val_acc,
            "best_epoch": self.trace.best_epoch if self.trace.records else -1,
            "epochs": self.trace.epochs,
            "stop_reason": self.trace.stop_reason.value,
            "diverged": self.diverged,
        }


@dataclass
class LayerResult:
    """The winning run of one layer with its interpolation curves and penalties."""

    layer: int
    winner: EditRunRecord
    weight_distance: float
    curves: CurveTable = field(default_factory=CurveTable)
    penalties: List[PenaltyReport] = field(default_factory=list)


@dataclass
class RunResult:
    config: ExperimentConfig
    runs: List[EditRunRecord]
    layers: List[LayerResult]
    provenance: Dict[str, Any]
    original: Optional[Checkpoint] = None
    base_history: List[EpochRecord] = field(default_factory=list)

    def winner(self, layer: int) -> EditRunRecord:
        for result in self.layers:
            if result.layer == layer:
                return result.winner
        raise ContractError(f"layer {layer} has no winning run")


def select_winner(runs: List[EditRunRecord]) -> Optional[EditRunRecord]:
    """Highest best val accuracy; ties go to the lower learning rate, then the lower restart."""
    candidates = [r for r in runs if not r.diverged]
    if not candidates:
        return None
    return min(candidates, key=lambda r: (-r.best_val_acc, r.job.learning_rate, r.job.restart))


# Worker state for a pool; each process gets its own copy through the initializer.
_CONTEXT: Dict[str, Any] = {}


def _init_worker(context: Dict[str, Any]) -> None:
    _CONTEXT.clear()
    _CONTEXT.update(context)


def execute_job(job: EditJob, context: Optional[Dict[str, Any]] = None) -> EditRunRecord:
    """Runs one editor call; divergence becomes a flagged record unless configured to raise."""
    ctx = context if context is not None else _CONTEXT
    cfg: ExperimentConfig = ctx["config"]
    net: Network = ctx["network"]
    data: ExperimentData = ctx["data"]
    editing = cfg.editing
    edit_cfg = EditConfig(
        layer=job.layer,
        learning_rate=job.learning_rate,
        max_epochs=editing.max_epochs,
        early_stop_ratio=editing.early_stop_ratio,
        rank=editing.rank,
        seed=job.seed,
        batch_size=editing.batch_size,
        center_features=editing.center_features,
    )
    monitor = data.base_val if editing.monitor_original else None
    update = None
    logger.info("%s: start (lr %g, seed %d)", job.name, job.learning_rate, job.seed)
    try:
        if job.method == EditMethod.LOCAL_FT_COLLISION:
            edited, trace = edit_local_ft_collision(net, data.pairs, edit_cfg, monitor)
        elif job.method == EditMethod.GLOBAL_FT_COLLISION:
            edited, trace = edit_global_ft_collision(net, data.pairs, edit_cfg, monitor)
        elif job.method == EditMethod.REWRITE:
            source = data.feature_source[: editing.feature_source_size]
            edited, trace, update = edit_rewrite(net, data.pairs, source, edit_cfg, monitor)
        elif job.method == EditMethod.DIRECT_LOWRANK:
            edited, trace, update = edit_direct_lowrank(net, data.pairs, edit_cfg, monitor)
        elif job.method == EditMethod.GLOBAL_FT_FORWARD:
            edited, trace = edit_global_ft_forward(net, data.supervised, edit_cfg, monitor)
        elif job.method == EditMethod.FULL_FT:
            edited, trace = edit_full_ft(net, data.supervised, edit_cfg, monitor)
        else:
            edited, trace = edit_local_ft_supervised(net, data.supervised, edit_cfg, monitor)
    except EditDivergenceError as e:
        if ctx.get("raise_on_divergence"):
            raise
        logger.warning("%s diverged: %s", job.name, e)
        trace = e.trace or EditTrace(stop_reason=StopReason.DIVERGED)
        return EditRunRecord(job, trace, diverged=True, message=str(e))
    logger.info(
        "%s: best val acc %.4f at epoch %d (%s)",
        job.name,
        trace.best_val_acc,
        trace.best_epoch,
        trace.stop_reason.value,
    )
    return EditRunRecord(job, trace, edited=capture(edited), update=update)


class ExperimentRunner:
    """Builds data and the base model, runs the edit grid, then sweeps each layer's winner."""

    def __init__(self, cfg: ExperimentConfig, settings: Optional[EditLabConfig] = None):
        # Sections mutated after construction are checked against each other here.
        self.cfg = resolve_config(parse_config(cfg.model_dump()))
        self.settings = settings or EditLabConfig()
        self.seeds = SeedTree(self.cfg.seed)
        self.out_dir = Path(self.cfg.output_dir)

        if self.settings.log_runs:
            setup_logging(self.settings)

    # -- stages -----------------------------------------------------------

    def generate_datasets(self) -> Dict[str, Union[BaseDataset, EditDataset, SupervisedDataset]]:
        """Base train/val sets, the editing pool and the editing task built from it."""
        cfg, seeds = self.cfg, self.seeds
        d = cfg.data
        train_n = d.class_count * d.samples_per_class
        val_n = d.class_count * d.val_samples_per_class
        base_train = generate_base(seeds("data/train"), d.class_count, d.samples_per_class, d.image_size)
        base_val = generate_base(
            seeds("data/val"), d.class_count, d.val_samples_per_class, d.image_size, id_offset=train_n
        )
        pool = generate_base(
            seeds("data/edit-pool"),
            d.class_count,
            d.edit_pool_per_class,
            d.image_size,
            id_offset=train_n + val_n,
        )
        task = cfg.edit_task
        policy = task.split_policy(seeds("edit-task/split"))
        if task.task == TaskKind.CLASS_REMAP:
            edit_task = make_remap_task(pool, policy, task.remap_classes, seeds("edit-task/remap"))
        else:
            triples = generate_edit_task(
                pool, task.region(), task.style, task.style_variants, task.min_region_fraction
            )
            edit_task = build_edit_dataset(triples, policy, concept=task.concept, style=task.style.value)
        return {"base_train": base_train, "base_val": base_val, "edit_pool": pool, "edit_task": edit_task}

    def prepare_data(self) -> ExperimentData:
        datasets = self.generate_datasets()
        base_train, base_val = datasets["base_train"], datasets["base_val"]
        edit_task = datasets["edit_task"]
        if isinstance(edit_task, EditDataset):
            pairs, supervised = edit_task, edit_task.supervised()
        else:
            pairs, supervised = None, edit_task
        logger.info(
            "data: %d base train, %d base val, %d edit train, %d edit val",
            len(base_train),
            len(base_val),
            len(supervised.train),
            len(supervised.val),
        )
        return ExperimentData(base_train.labeled(), base_val.labeled(), supervised, pairs)

    def build_model(self) -> Network:
        cfg = self.cfg
        net = build_network(
            cfg.model.preset,
            cfg.data.class_count,
            self.seeds("model/init"),
            input_shape=(3, cfg.data.image_size, cfg.data.image_size),
            hidden=cfg.model.hidden,
        )
        for layer in cfg.editing.layers:
            if not 1 <= layer <= net.L or not net.layer(layer).is_editable:
                raise ConfigError(
                    f"layer {layer} is not editable in {net.name}; editable layers are {net.editable_indices}"
                )
        return net

    def train_original(self, net: Network, data: ExperimentData) -> List[EpochRecord]:
        return train_base(net, data.base_train, data.base_val, self.cfg.training, self.seeds("training/shuffle"))

    def jobs(self) -> List[EditJob]:
        editing = self.cfg.editing
        out = []
        for layer in editing.layers:
            for lr_index, lr in enumerate(editing.lr_grid):
                for restart in range(editing.restarts):
                    path = f"edit/{editing.method.value}/layer{layer}/lr{lr_index}/restart{restart}"
                    out.append(EditJob(editing.method, layer, lr_index, lr, restart, self.seeds(path)))
        return out

    def run_edits(self, net: Network, data: ExperimentData) -> List[EditRunRecord]:
        jobs = self.jobs()
        context = {
            "config": self.cfg,
            "network": net,
            "data": data,
            "raise_on_divergence": self.settings.raise_on_divergence,
        }
        if self.cfg.jobs > 1 and len(jobs) > 1:
            with Pool(processes=self.cfg.jobs, initializer=_init_worker, initargs=(context,)) as pool:
                records = pool.map(execute_job, jobs)
        else:
            records = [execute_job(job, context) for job in jobs]
        return sorted(records, key=lambda r: r.job.key)

    def shifted_sets(self, data: ExperimentData) -> List[Tuple[ShiftSpec, LabeledData, LabeledData, int]]:
        out = []
        for spec in self.cfg.shift_specs():
            seed = self.seeds(f"shift/{spec}")
            out.append(
                (
                    spec,
                    corrupt_dataset(data.base_val, spec, seed),
                    corrupt_dataset(data.edit_val, spec, seed + 1),
                    seed,
                )
            )
        return out

    def evaluate_winner(
        self,
        layer: int,
        winner: EditRunRecord,
        original: Checkpoint,
        data: ExperimentData,
        shifted: List[Tuple[ShiftSpec, LabeledData, LabeledData, int]],
    ) -> LayerResult:
        evals = [("orig_val", data.base_val), ("edit_val", data.edit_val)]
        for spec, orig_shift, edit_shift, _ in shifted:
            evals += [(f"orig_val@{spec}", orig_shift), (f"edit_val@{spec}", edit_shift)]
        curves = interpolation_sweep(original, winner.edited, self.cfg.alphas, evals)

        f_orig = original.to_network()
        f_edited = winner.edited.to_network()
        penalties = [
            build_penalty_report(
                f_edited,
                f_orig,
                data.base_val,
                data.edit_val,
                spec,
                method=winner.job.method.value,
                layer=layer,
                seed=winner.job.seed,
                corruption_seed=seed,
            )
            for spec, _, _, seed in shifted
        ]
        return LayerResult(
            layer=layer,
            winner=winner,
            weight_distance=checkpoint_distance(original, winner.edited),
            curves=curves,
            penalties=penalties,
        )

    def save_checkpoints(self, original: Checkpoint, layers: List[LayerResult]) -> None:
        ckpt_dir = self.out_dir / "checkpoints"
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        meta = {"config_hash": self.cfg.config_hash(), "seed": self.cfg.seed}
        save_checkpoint(ckpt_dir / "original.bin", original, meta)
        for result in layers:
            job = result.winner.job
            save_checkpoint(
                ckpt_dir / f"edited_layer{result.layer}.bin",
                result.winner.edited,
                {**meta, "method": job.method.value, "layer": job.layer, "lr": job.learning_rate},
            )
            if result.winner.update is not None:
                result.winner.update.save(
                    ckpt_dir / f"update_layer{result.layer}.bin", original.architecture_id
                )

    # -- entry points -----------------------------------------------------

    def run(self, sweep: bool = True) -> RunResult:
        started = datetime.now(timezone.utc).isoformat()
        logger.info("run %s: %s into %s", self.cfg.config_hash()[:12], self.cfg.editing.method.value, self.out_dir)
        net = self.build_model()
        data = self.prepare_data()
        history = self.train_original(net, data)
        original = capture(net)
        logger.info(
            "original model: orig val %.4f, edit val %.4f",
            accuracy(net, data.base_val),
            accuracy(net, data.edit_val),
        )

        runs = self.run_edits(net, data)
        shifted = self.shifted_sets(data) if sweep else []
        layers = []
        for layer in self.cfg.editing.layers:
            winner = select_winner([r for r in runs if r.job.layer == layer])
            if winner is None:
                logger.warning("every run at layer %d diverged; layer skipped", layer)
                continue
            if sweep:
                layers.append(self.evaluate_winner(layer, winner, original, data, shifted))
            else:
                layers.append(LayerResult(layer, winner, checkpoint_distance(original, winner.edited)))
            logger.info(
                "layer %d winner: lr %g restart %d, val acc %.4f, weight distance %.4g",
                layer,
                winner.job.learning_rate,
                winner.job.restart,
                winner.best_val_acc,
                layers[-1].weight_distance,
            )
        self.save_checkpoints(original, layers)
        logger.info("run finished: %d edit runs, %d layers evaluated", len(runs), len(layers))

        provenance = {
            "config_hash": self.cfg.config_hash(),
            "global_seed": self.cfg.seed,
            "seeds": dict(self.seeds.issued),
            "started": started,
            "finished": datetime.now(timezone.utc).isoformat(),
        }
        return RunResult(self.cfg, runs, layers, provenance, original, history)


def run_experiment(
    cfg: ExperimentConfig, settings: Optional[EditLabConfig] = None, sweep: bool = True
) -> RunResult:
    """Runs the whole experiment and writes its report into ``cfg.output_dir``."""
    from .report import emit_report

    result = ExperimentRunner(cfg, settings).run(sweep=sweep)
    emit_report(result, cfg.output_dir)
    return result
