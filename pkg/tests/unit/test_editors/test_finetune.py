import numpy as np
import pytest

from editlab.editors import (
    EditConfig,
    FullFineTuneEditor,
    GlobalCollisionEditor,
    GlobalForwardEditor,
    LocalCollisionEditor,
    LocalSupervisedEditor,
    collision_loss,
    edit_full_ft,
    edit_global_ft_collision,
    edit_global_ft_forward,
    edit_local_ft_collision,
    edit_local_ft_supervised,
)
from editlab.exceptions.errors import ContractError
from editlab.network import Dense, Network, accuracy, calibrate_norms, capture, changed_layers
from editlab.shiftlab import EditDataset, LabeledData, SupervisedDataset, TripleSet


def _param_layers(editor):
    return sorted({int(p.name.split(".")[1]) for p in editor.params})


class TestTrainableSpans:
    def test_local_collision_trains_one_layer(self, tiny_mlp, edit_pairs, quick_edit_config):
        """Test that local collision fine-tuning exposes only W_l and its bias."""
        editor = LocalCollisionEditor(tiny_mlp, edit_pairs, quick_edit_config)
        assert [p.name for p in editor.params] == ["layers.4.weight", "layers.4.bias"]

    def test_global_collision_trains_up_to_l(self, tiny_cnn, edit_pairs_cnn, quick_edit_config):
        """Test that global collision fine-tuning covers every parameterized layer up to l."""
        editor = GlobalCollisionEditor(tiny_cnn, edit_pairs_cnn, quick_edit_config)
        assert _param_layers(editor) == [1, 2, 4]

    def test_global_forward_trains_from_l(self, tiny_cnn, edit_pairs_cnn, quick_edit_config):
        """Test that global forward fine-tuning covers every parameterized layer from l on."""
        editor = GlobalForwardEditor(tiny_cnn, edit_pairs_cnn.supervised(), quick_edit_config)
        assert _param_layers(editor) == [4, 5, 8, 10]

    def test_full_fine_tune_trains_everything(self, tiny_cnn, edit_pairs_cnn, quick_edit_config):
        """Test that full fine-tuning ignores the layer and trains all parameters."""
        editor = FullFineTuneEditor(tiny_cnn, edit_pairs_cnn.supervised(), quick_edit_config)
        assert _param_layers(editor) == tiny_cnn.parameterized_indices

    def test_non_editable_layer(self, tiny_mlp, edit_pairs):
        """Test that a ReLU layer cannot be edited."""
        cfg = EditConfig(layer=3, learning_rate=0.01, max_epochs=1)
        with pytest.raises(ContractError):
            LocalCollisionEditor(tiny_mlp, edit_pairs, cfg)
        with pytest.raises(ContractError):
            LocalSupervisedEditor(tiny_mlp, edit_pairs.supervised(), cfg)

    def test_labels_out_of_range(self, tiny_mlp, base_small, quick_edit_config):
        """Test that labels beyond the classifier head are rejected."""
        bad = LabeledData(base_small.images[:4], np.array([0, 1, 2, 3]))
        with pytest.raises(ContractError):
            LocalSupervisedEditor(tiny_mlp, SupervisedDataset(bad, bad), quick_edit_config)


class TestCollisionEditing:
    def test_local_edit_changes_only_layer_l(self, tiny_mlp, edit_pairs, quick_edit_config):
        """Test that the returned network differs from the original at layer l at most."""
        before = capture(tiny_mlp)
        edited, trace = edit_local_ft_collision(tiny_mlp, edit_pairs, quick_edit_config)
        assert set(changed_layers(before, capture(edited))) <= {4}
        np.testing.assert_array_equal(capture(tiny_mlp).flat, before.flat)
        assert trace.records[0].epoch == 0

    def test_collision_loss_decreases(self, tiny_mlp, edit_pairs):
        """Test that a small step lowers the collision objective after one epoch."""
        cfg = EditConfig(layer=4, learning_rate=1e-3, max_epochs=2, early_stop_ratio=0.0, seed=1)
        _, trace = edit_local_ft_collision(tiny_mlp, edit_pairs, cfg)
        assert trace.train_losses[1] < trace.train_losses[0]
        assert trace.records[0].train_loss == pytest.approx(collision_loss(tiny_mlp, 4, edit_pairs.train))

    def test_global_edit_keeps_norm_statistics(self, tiny_cnn, edit_pairs_cnn, base_cnn, quick_edit_config):
        """Test that frozen normalization statistics survive a global edit."""
        calibrate_norms(tiny_cnn, base_cnn.images)
        mean = tiny_cnn.layer(2).running_mean.copy()
        edited, _ = edit_global_ft_collision(tiny_cnn, edit_pairs_cnn, quick_edit_config)
        np.testing.assert_array_equal(edited.layer(2).running_mean, mean)
        assert set(changed_layers(capture(tiny_cnn), capture(edited))) <= {1, 2, 4}

    def test_monitor_column(self, tiny_mlp, edit_pairs, labeled_small, quick_edit_config):
        """Test that a monitor set adds original-task accuracy to every record."""
        _, trace = edit_local_ft_collision(tiny_mlp, edit_pairs, quick_edit_config, monitor=labeled_small)
        assert trace.monitored
        assert all(0.0 <= r.orig_val_acc <= 1.0 for r in trace.records)

    def test_empty_pairs(self, tiny_mlp):
        """Test that the collision loss of no pairs is undefined."""
        with pytest.raises(ContractError):
            collision_loss(tiny_mlp, 4, TripleSet.empty())


class TestSupervisedEditing:
    def test_seeded_runs_are_identical(self, tiny_mlp, edit_pairs, quick_edit_config):
        """Test that the same config reproduces the same edit."""
        data = edit_pairs.supervised()
        a, trace_a = edit_local_ft_supervised(tiny_mlp, data, quick_edit_config)
        b, trace_b = edit_local_ft_supervised(tiny_mlp, data, quick_edit_config)
        np.testing.assert_array_equal(capture(a).flat, capture(b).flat)
        assert trace_a.val_accs == trace_b.val_accs

    def test_result_is_frozen(self, tiny_mlp, edit_pairs, quick_edit_config):
        """Test that no parameter of the returned network still requires grad."""
        edited, _ = edit_local_ft_supervised(tiny_mlp, edit_pairs.supervised(), quick_edit_config)
        assert not any(t.requires_grad for _, _, t in edited.named_parameters())

    def test_best_epoch_is_restored(self, tiny_mlp, edit_pairs, quick_edit_config):
        """Test that the returned network scores the trace's best validation accuracy."""
        data = edit_pairs.supervised()
        edited, trace = edit_local_ft_supervised(tiny_mlp, data, quick_edit_config)
        assert accuracy(edited, data.val) == pytest.approx(trace.best_val_acc)

    def test_global_forward_changes_only_later_layers(self, tiny_mlp, edit_pairs, quick_edit_config):
        """Test that global forward editing leaves the layers before l untouched."""
        before = capture(tiny_mlp)
        edited, _ = edit_global_ft_forward(tiny_mlp, edit_pairs.supervised(), quick_edit_config)
        assert set(changed_layers(before, capture(edited))) <= {4, 6}

    def test_full_fine_tune_keeps_norm_statistics(self, tiny_cnn, edit_pairs_cnn, base_cnn, quick_edit_config):
        """Test that full fine-tuning never moves frozen normalization statistics."""
        calibrate_norms(tiny_cnn, base_cnn.images)
        stats = [(tiny_cnn.layer(i).running_mean.copy(), tiny_cnn.layer(i).running_var.copy()) for i in (2, 5)]
        edited, trace = edit_full_ft(tiny_cnn, edit_pairs_cnn.supervised(), quick_edit_config)
        for i, (mean, var) in zip((2, 5), stats):
            np.testing.assert_array_equal(edited.layer(i).running_mean, mean)
            np.testing.assert_array_equal(edited.layer(i).running_var, var)
        assert accuracy(edited, edit_pairs_cnn.supervised().val) == pytest.approx(trace.best_val_acc)


def _pair_difference(pairs):
    return pairs.train.x_prime[0] - pairs.train.x[0]


class TestClosedForms:
    def test_local_collision_projects_out_the_difference(self, single_dense, orthogonal_pair):
        """Test that local collision on a linear layer converges to W (I - d d^T / |d|^2)."""
        cfg = EditConfig(layer=1, learning_rate=0.5, max_epochs=500, weight_decay=0.0)
        edited, trace = edit_local_ft_collision(single_dense, orthogonal_pair, cfg)
        d = _pair_difference(orthogonal_pair)
        W = single_dense.layer(1).weight.data
        W_edited = edited.layer(1).weight.data
        assert np.sum((W_edited @ d) ** 2) / np.sum(d**2) < 1e-6
        np.testing.assert_allclose(W_edited, W - np.outer(W @ d, d) / (d @ d), atol=1e-6)
        assert trace.best_epoch > 0

    def test_flat_accuracy_still_returns_the_edit(self, single_dense, orthogonal_pair):
        """Test that a run whose val accuracy never changes returns its converged weights."""
        cfg = EditConfig(layer=1, learning_rate=0.5, max_epochs=200, weight_decay=0.0)
        edited, trace = edit_local_ft_collision(single_dense, orthogonal_pair, cfg)
        assert set(trace.val_accs) == {1.0}
        assert trace.best.train_loss == min(trace.train_losses)
        assert collision_loss(edited, 1, orthogonal_pair.train) < 1e-6 * trace.records[0].train_loss

    def test_identical_pairs_are_a_no_op(self, tiny_mlp, edit_pairs, quick_edit_config):
        """Test that pairs with x' = x leave the network exactly as it was."""
        train = edit_pairs.train
        same = TripleSet(train.x, train.x.copy(), train.y, train.image_ids, train.style_variants)
        cfg = quick_edit_config.model_copy(update={"weight_decay": 0.0})
        edited, trace = edit_local_ft_collision(tiny_mlp, EditDataset(same, edit_pairs.val), cfg)
        assert set(trace.train_losses) == {0.0}
        assert trace.best_epoch == 0
        np.testing.assert_array_equal(capture(edited).flat, capture(tiny_mlp).flat)

    def test_global_collision_at_first_layer_is_local(self, tiny_mlp, edit_pairs, quick_edit_config):
        """Test that both collision editors coincide when nothing precedes the edit layer."""
        cfg = quick_edit_config.model_copy(update={"layer": 2})
        local, local_trace = edit_local_ft_collision(tiny_mlp, edit_pairs, cfg)
        glob, glob_trace = edit_global_ft_collision(tiny_mlp, edit_pairs, cfg)
        np.testing.assert_array_equal(capture(local).flat, capture(glob).flat)
        assert local_trace.train_losses == glob_trace.train_losses

    def test_global_collision_reaches_a_lower_loss(self, single_dense, orthogonal_pair):
        """Test that training the layers below l as well lowers the collision loss faster."""
        net = Network([Dense(np.eye(4), np.zeros(4)), single_dense.layer(1).copy()], input_shape=(4,))
        cfg = EditConfig(
            layer=2, learning_rate=0.5, max_epochs=30, momentum=0.0, weight_decay=0.0, early_stop_ratio=0.0
        )
        _, local = edit_local_ft_collision(net, orthogonal_pair, cfg)
        _, glob = edit_global_ft_collision(net, orthogonal_pair, cfg)
        assert glob.train_losses[1] < local.train_losses[1]
        assert glob.best.train_loss <= local.best.train_loss

    def test_separable_last_layer_reaches_full_accuracy(self, rng):
        """Test that supervised editing of a linear head fits linearly separable data."""
        weight = np.array([[0.0, 0.0, 1.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
        net = Network([Dense(weight, np.zeros(3))], input_shape=(4,))
        labels = np.tile(np.arange(3), 6)
        points = 3.0 * np.eye(4)[labels] + rng.normal(0.0, 0.1, size=(18, 4))
        data = SupervisedDataset(LabeledData(points[:12], labels[:12]), LabeledData(points[12:], labels[12:]))
        cfg = EditConfig(layer=1, learning_rate=0.1, max_epochs=200, early_stop_ratio=0.0)
        edited, trace = edit_local_ft_supervised(net, data, cfg)
        assert trace.records[0].val_acc == 0.0
        assert trace.best_val_acc == 1.0
        assert accuracy(edited, data.val) == 1.0

    def test_zero_learning_rate_changes_nothing(self, tiny_mlp, edit_pairs):
        """Test that a zero learning rate keeps every weight and the loss fixed."""
        cfg = EditConfig(layer=4, learning_rate=0.0, max_epochs=3, seed=1)
        edited, trace = edit_local_ft_supervised(tiny_mlp, edit_pairs.supervised(), cfg)
        np.testing.assert_array_equal(capture(edited).flat, capture(tiny_mlp).flat)
        assert len(set(trace.train_losses)) == 1
        assert trace.best_epoch == 0

    def test_global_forward_at_last_layer_is_local(self, tiny_mlp, edit_pairs, quick_edit_config):
        """Test that global forward editing of the head alone equals local supervised editing."""
        cfg = quick_edit_config.model_copy(update={"layer": 6})
        data = edit_pairs.supervised()
        local, _ = edit_local_ft_supervised(tiny_mlp, data, cfg)
        glob, _ = edit_global_ft_forward(tiny_mlp, data, cfg)
        np.testing.assert_array_equal(capture(local).flat, capture(glob).flat)

    def test_full_fine_tune_is_global_forward_from_layer_one(self, tiny_cnn, edit_pairs_cnn, quick_edit_config):
        """Test that full fine-tuning equals global forward editing from the first layer."""
        cfg = quick_edit_config.model_copy(update={"layer": 1})
        data = edit_pairs_cnn.supervised()
        full, _ = edit_full_ft(tiny_cnn, data, cfg)
        glob, _ = edit_global_ft_forward(tiny_cnn, data, cfg)
        np.testing.assert_array_equal(capture(full).flat, capture(glob).flat)
