import numpy as np
import pytest
from pydantic import ValidationError

from editlab.editors import (
    EarlyStopping,
    EditConfig,
    EditTrace,
    LocalSupervisedEditor,
    StopReason,
    TraceRecord,
    resolve_batch_size,
)
from editlab.exceptions.errors import EditDivergenceError


class ExplodingEditor(LocalSupervisedEditor):
    """Scales every batch loss far past the divergence threshold once the initial loss is known."""

    scale = 1.0

    def full_loss(self) -> float:
        value = super().full_loss()
        self.scale = 1e7
        return value

    def batch_loss(self, indices):
        return super().batch_loss(indices) * self.scale


class TestEarlyStopping:
    def test_fires_below_half_of_best(self):
        """Test that only a value strictly under ratio * best stops training."""
        stopper = EarlyStopping(0.5)
        assert not stopper.update(0.8)
        assert not stopper.update(0.4)
        assert stopper.update(0.39)

    def test_best_tracks_maximum(self):
        """Test that the reference value rises with improvements."""
        stopper = EarlyStopping(0.5)
        for value in (0.2, 0.6, 0.5):
            stopper.update(value)
        assert stopper.best == 0.6
        assert stopper.update(0.29)

    def test_zero_ratio_never_fires(self):
        """Test that a ratio of zero disables early stopping for nonnegative accuracies."""
        stopper = EarlyStopping(0.0)
        assert not any(stopper.update(v) for v in (0.9, 0.0, 0.1))

    def test_first_drop_below_half_on_random_sequences(self):
        """Test the stopping epoch against a direct scan over many random accuracy sequences."""
        rng = np.random.default_rng(7)
        for _ in range(200):
            values = rng.uniform(size=12).tolist()
            expected = next((i for i in range(1, 12) if values[i] < 0.5 * max(values[:i])), None)
            stopper = EarlyStopping(0.5)
            fired = next((i for i, v in enumerate(values) if stopper.update(v)), None)
            assert fired == expected


class TestBatchSize:
    def test_defaults(self):
        """Test full batches up to 256 samples and 64 beyond."""
        assert resolve_batch_size(None, 256) == 256
        assert resolve_batch_size(None, 257) == 64

    def test_explicit_size_is_capped(self):
        """Test that an explicit batch size never exceeds the sample count."""
        assert resolve_batch_size(32, 10) == 10
        assert resolve_batch_size(8, 100) == 8


class TestEditTrace:
    def test_ties_go_to_the_lower_loss(self):
        """Test that an equal accuracy with a lower train loss moves the best epoch."""
        trace = EditTrace()
        for epoch, acc in enumerate((0.5, 0.7, 0.7, 0.6)):
            trace.append(TraceRecord(epoch, 1.0 / (epoch + 1), acc))
        assert trace.best_epoch == 2
        assert trace.best_val_acc == 0.7
        assert trace.best.train_loss == pytest.approx(1.0 / 3.0)
        assert trace.epochs == 3

    def test_full_ties_keep_the_earlier_epoch(self):
        """Test that equal accuracy and equal loss do not move the best epoch."""
        trace = EditTrace()
        assert trace.append(TraceRecord(0, 0.25, 1.0))
        assert not trace.append(TraceRecord(1, 0.25, 1.0))
        assert not trace.append(TraceRecord(2, 0.5, 1.0))
        assert trace.best_epoch == 0

    def test_flat_accuracy_keeps_the_converged_epoch(self):
        """Test that a run whose accuracy never moves still selects its lowest-loss epoch."""
        trace = EditTrace()
        for epoch, loss in enumerate((0.9, 0.4, 0.1, 0.2)):
            trace.append(TraceRecord(epoch, loss, 1.0))
        assert trace.best_epoch == 2
        assert trace.epochs == 3

    def test_csv_columns(self, tmp_path):
        """Test the trace CSV header with and without the monitor column."""
        trace = EditTrace()
        trace.append(TraceRecord(0, 0.25, 0.5))
        trace.to_csv(tmp_path / "plain.csv")
        assert (tmp_path / "plain.csv").read_text().splitlines() == ["epoch,train_loss,val_acc", "0,0.25,0.5"]
        trace.append(TraceRecord(1, 0.125, 0.75, 0.875))
        trace.to_csv(tmp_path / "monitored.csv")
        lines = (tmp_path / "monitored.csv").read_text().splitlines()
        assert lines[0] == "epoch,train_loss,val_acc,orig_val_acc"
        assert lines[1] == "0,0.25,0.5,"


class TestEditConfig:
    def test_defaults(self):
        """Test the default editing budget and SGD settings."""
        cfg = EditConfig(layer=2, learning_rate=0.1)
        assert cfg.max_epochs == 10000
        assert cfg.early_stop_ratio == 0.5
        assert cfg.sgd().momentum == 0.9

    def test_layer_zero_is_rejected(self):
        """Test that layer numbering starts at one."""
        with pytest.raises(ValidationError):
            EditConfig(layer=0, learning_rate=0.1)


class TestDivergence:
    def test_exploding_loss_raises_with_trace(self, tiny_mlp, edit_pairs, quick_edit_config):
        """Test that a batch loss far above the initial loss aborts the run and keeps its trace."""
        editor = ExplodingEditor(tiny_mlp, edit_pairs.supervised(), quick_edit_config)
        with pytest.raises(EditDivergenceError) as info:
            editor.run()
        trace = info.value.trace
        assert trace.stop_reason == StopReason.DIVERGED
        assert [r.epoch for r in trace.records] == [0]

    def test_original_network_is_untouched(self, tiny_mlp, edit_pairs, quick_edit_config):
        """Test that a diverged run leaves the caller's network as it was."""
        before = tiny_mlp.layer(4).weight.data.copy()
        with pytest.raises(EditDivergenceError):
            ExplodingEditor(tiny_mlp, edit_pairs.supervised(), quick_edit_config).run()
        np.testing.assert_array_equal(tiny_mlp.layer(4).weight.data, before)
