import math

import numpy as np
import pytest

import editlab.harness.runner as runner_module
from editlab.editors import EditMethod, EditTrace, StopReason, TraceRecord
from editlab.exceptions.errors import ConfigError, EditDivergenceError
from editlab.harness import (
    EditingSection,
    EditJob,
    EditRunRecord,
    ExperimentRunner,
    derive_seed,
    select_winner,
)
from editlab.harness.runner import ExperimentData, execute_job
from editlab.shiftlab import LabeledData, SupervisedDataset


def _record(lr, restart, acc, diverged=False):
    trace = EditTrace()
    trace.append(TraceRecord(0, 1.0, acc))
    job = EditJob(EditMethod.REWRITE, 4, 0, lr, restart, 0)
    return EditRunRecord(job, trace, diverged=diverged)


def _poisoned(data):
    """Copy of ``data`` whose editing training images contain a NaN."""
    images = data.supervised.train.images.copy()
    images[0, 0, 0, 0] = np.nan
    train = LabeledData(images, data.supervised.train.labels)
    return ExperimentData(data.base_train, data.base_val, SupervisedDataset(train, data.supervised.val))


class TestSelectWinner:
    def test_highest_accuracy_wins(self):
        """Test that the best validation accuracy decides."""
        runs = [_record(0.1, 0, 0.5), _record(1.0, 0, 0.8), _record(0.01, 0, 0.6)]
        assert select_winner(runs).job.learning_rate == 1.0

    def test_ties_prefer_low_rate_then_low_restart(self):
        """Test the tie-break order."""
        runs = [_record(1.0, 0, 0.8), _record(0.1, 2, 0.8), _record(0.1, 1, 0.8)]
        winner = select_winner(runs)
        assert (winner.job.learning_rate, winner.job.restart) == (0.1, 1)

    def test_diverged_runs_never_win(self):
        """Test that diverged runs are excluded and all-diverged grids have no winner."""
        runs = [_record(0.1, 0, 0.9, diverged=True), _record(1.0, 0, 0.2)]
        assert select_winner(runs).job.learning_rate == 1.0
        assert select_winner(runs[:1]) is None

    def test_empty_trace_summary(self):
        """Test that a run without records reports nan accuracy."""
        job = EditJob(EditMethod.FULL_FT, 4, 0, 0.1, 0, 0)
        record = EditRunRecord(job, EditTrace(stop_reason=StopReason.DIVERGED), diverged=True)
        summary = record.summary()
        assert math.isnan(summary["best_val_acc"])
        assert summary["stop_reason"] == "diverged"
        assert job.name == "full_ft_layer4_lr0_restart0"


class TestExperimentRunner:
    def test_job_grid(self, tiny_experiment, quiet_settings):
        """Test one job per layer, rate and restart, each with its own derived seed."""
        runner = ExperimentRunner(tiny_experiment, quiet_settings)
        jobs = runner.jobs()
        assert len(jobs) == 6
        assert jobs[0].seed == derive_seed(11, "edit/local_ft_collision/layer2/lr0/restart0")
        assert len({j.seed for j in jobs}) == 6

    def test_restarts_multiply_the_grid(self, tiny_experiment, quiet_settings):
        """Test that restarts add jobs per (layer, rate)."""
        tiny_experiment.editing = EditingSection(
            method="direct_lowrank", layers=[4], lr_grid=[0.1, 1.0], restarts=3
        )
        assert len(ExperimentRunner(tiny_experiment, quiet_settings).jobs()) == 6

    def test_data_sizes(self, tiny_experiment, quiet_settings):
        """Test base and editing set sizes for the tiny config."""
        data = ExperimentRunner(tiny_experiment, quiet_settings).prepare_data()
        assert len(data.base_train) == 24 and len(data.base_val) == 12
        assert len(data.supervised.train) == 6
        assert len(data.pairs.val) == 18

    def test_non_editable_layer_fails_before_data(self, tiny_experiment, quiet_settings, monkeypatch):
        """Test that a grid naming a ReLU layer is rejected without generating any dataset."""
        calls = []
        monkeypatch.setattr(runner_module, "generate_base", lambda *args, **kwargs: calls.append(args))
        tiny_experiment.editing.layers = [3]
        with pytest.raises(ConfigError, match="not editable"):
            ExperimentRunner(tiny_experiment, quiet_settings)
        assert calls == []

    def test_model_is_checked_before_data(self, tiny_experiment, quiet_settings, monkeypatch):
        """Test that a run whose layers went bad after construction stops at the model stage."""
        calls = []
        monkeypatch.setattr(runner_module, "generate_base", lambda *args, **kwargs: calls.append(args))
        runner = ExperimentRunner(tiny_experiment, quiet_settings)
        runner.cfg.editing.layers = [3]
        with pytest.raises(ConfigError, match="not editable"):
            runner.run()
        assert calls == []

    def test_divergence_becomes_a_flagged_record(self, tiny_experiment, quiet_settings):
        """Test that a non-finite editing loss is recorded rather than raised."""
        runner = ExperimentRunner(tiny_experiment, quiet_settings)
        data = _poisoned(runner.prepare_data())
        job = EditJob(EditMethod.LOCAL_FT_SUPERVISED, 6, 0, 0.01, 0, 0)
        record = execute_job(job, {"config": runner.cfg, "network": runner.build_model(), "data": data})
        assert record.diverged
        assert record.edited is None
        assert record.trace.stop_reason == StopReason.DIVERGED
        assert math.isnan(record.best_val_acc)

    def test_divergence_can_raise(self, tiny_experiment, quiet_settings):
        """Test that raise_on_divergence propagates the error."""
        runner = ExperimentRunner(tiny_experiment, quiet_settings)
        data = _poisoned(runner.prepare_data())
        job = EditJob(EditMethod.LOCAL_FT_SUPERVISED, 6, 0, 0.01, 0, 0)
        context = {"config": runner.cfg, "network": runner.build_model(), "data": data, "raise_on_divergence": True}
        with pytest.raises(EditDivergenceError):
            execute_job(job, context)
