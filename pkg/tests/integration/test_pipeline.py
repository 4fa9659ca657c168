import csv
import logging
from pathlib import Path

import numpy as np
import pytest

from editlab.editors import LowRankUpdate
from editlab.harness import EditingSection, ExperimentConfig, run_experiment
from editlab.harness.cli import main
from editlab.network import load_checkpoint
from editlab.shiftlab import BaseDataset, EditDataset, load_dataset


def _rows(path: Path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestSweepPipeline:
    def test_report_files(self, tiny_experiment, quiet_settings):
        """Test that a full sweep writes every table, trace, checkpoint and plot file."""
        result = run_experiment(tiny_experiment, quiet_settings)
        out = Path(tiny_experiment.output_dir)
        assert len(result.runs) == 6
        assert len(_rows(out / "edit_runs.csv")) == 6
        assert len(list((out / "traces").glob("*.csv"))) == 6
        for name in ("summary.csv", "curves.csv", "penalties.csv", "penalty_summary.csv", "provenance.json"):
            assert (out / name).is_file()
        for name in ("accuracy_vs_alpha", "ood_vs_alpha", "ood_vs_id"):
            assert (out / "plots" / f"{name}.tsv").is_file()
        assert (out / "checkpoints" / "original.bin").is_file()

    def test_curves_and_penalties_agree(self, tiny_experiment, quiet_settings):
        """Test curve endpoints against the summary and penalty tables."""
        result = run_experiment(tiny_experiment, quiet_settings)
        for layer_result in result.layers:
            curves = layer_result.curves
            assert curves.alphas == [0.0, 0.5, 1.0]
            assert len(curves.eval_names) == 4
            (report,) = layer_result.penalties
            assert report.acc_orig_clean == curves.value(1.0, "orig_val")
            assert report.acc_edit_clean == curves.value(1.0, "edit_val")
            assert report.acc_orig_shift_origmodel == curves.value(0.0, "orig_val@gaussian_noise:2")
            assert report.acc_edit_shift == curves.value(1.0, "edit_val@gaussian_noise:2")

    def test_edit_touches_only_its_layer(self, tiny_experiment, quiet_settings):
        """Test that each saved winner differs from the original at its own layer only."""
        result = run_experiment(tiny_experiment, quiet_settings)
        out = Path(tiny_experiment.output_dir) / "checkpoints"
        original = load_checkpoint(out / "original.bin")
        for layer_result in result.layers:
            edited = load_checkpoint(out / f"edited_layer{layer_result.layer}.bin")
            for (layer, name), values in edited.arrays().items():
                if layer != layer_result.layer:
                    np.testing.assert_array_equal(values, original.arrays()[(layer, name)])

    def test_rerun_is_reproducible(self, tiny_experiment, quiet_settings, tmp_path):
        """Test that the same seed reproduces every table except timestamps."""
        run_experiment(tiny_experiment, quiet_settings)
        first = Path(tiny_experiment.output_dir)
        second = tmp_path / "again"
        run_experiment(tiny_experiment.model_copy(update={"output_dir": str(second)}), quiet_settings)
        for name in ("edit_runs.csv", "summary.csv", "curves.csv", "penalties.csv", "plots/ood_vs_id.tsv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_run_logs_start_and_finish(self, tiny_experiment, quiet_settings, caplog):
        """Test that the runner logs its start and its run count through the module logger."""
        caplog.set_level(logging.INFO, logger="editlab.harness.runner")
        run_experiment(tiny_experiment, quiet_settings, sweep=False)
        messages = [r.getMessage() for r in caplog.records if r.name == "editlab.harness.runner"]
        assert messages[0].startswith("run ") and "local_ft_collision into" in messages[0]
        assert "run finished: 6 edit runs, 2 layers evaluated" in messages

    def test_edit_only_skips_sweeps(self, tiny_experiment, quiet_settings):
        """Test that the edit stage alone writes winners without curves or penalties."""
        run_experiment(tiny_experiment, quiet_settings, sweep=False)
        out = Path(tiny_experiment.output_dir)
        assert len(_rows(out / "summary.csv")) == 2
        assert _rows(out / "curves.csv") == []
        assert not (out / "penalties.csv").exists()


class TestCommandLine:
    def test_gen_writes_datasets(self, tiny_experiment, tmp_path):
        """Test that gen saves reloadable base and editing datasets."""
        config = tmp_path / "cfg.json"
        config.write_text(tiny_experiment.model_dump_json())
        assert main(["gen", "--config", str(config), "--quiet"]) == 0
        data_dir = Path(tiny_experiment.output_dir) / "data"
        assert isinstance(load_dataset(data_dir / "base_train"), BaseDataset)
        assert isinstance(load_dataset(data_dir / "edit_task"), EditDataset)

    def test_train_base_then_report(self, tiny_experiment, tmp_path):
        """Test train-base output and re-rendering a finished sweep from the command line."""
        config = tmp_path / "cfg.json"
        config.write_text(tiny_experiment.model_dump_json())
        assert main(["train-base", "--config", str(config), "--quiet"]) == 0
        out = Path(tiny_experiment.output_dir)
        assert len(_rows(out / "base_training.csv")) == 2
        assert main(["sweep", "--config", str(config), "--quiet"]) == 0
        (out / "plots" / "ood_vs_id.tsv").unlink()
        assert main(["report", "--in", str(out), "--quiet"]) == 0
        assert (out / "plots" / "ood_vs_id.tsv").is_file()


@pytest.mark.slow
class TestConvolutionalRewrite:
    def test_parallel_rewrite_sweep(self, tmp_path, quiet_settings):
        """Test a rank-1 rewrite grid on cnn-small run across two worker processes."""
        cfg = ExperimentConfig(
            data={"class_count": 3, "samples_per_class": 12, "val_samples_per_class": 6, "edit_pool_per_class": 12},
            edit_task={"style_variants": 2, "n_train": 3},
            training={"epochs": 2, "batch_size": 16, "calibration_samples": 32},
            editing=EditingSection(method="rewrite", layers=[4, 8], lr_grid=[0.1, 1.0], restarts=2, max_epochs=5),
            alphas=[0.0, 0.25, 0.5, 0.75, 1.0],
            shifts=["*:3"],
            output_dir=str(tmp_path / "cnn"),
            jobs=2,
        )
        result = run_experiment(cfg, quiet_settings)
        assert len(result.runs) == 8
        out = tmp_path / "cnn" / "checkpoints"
        for layer_result in result.layers:
            update = LowRankUpdate.load(out / f"update_layer{layer_result.layer}.bin")
            assert update.numerical_rank() <= 1
            assert len(layer_result.penalties) == 6
