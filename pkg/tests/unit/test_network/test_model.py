import numpy as np
import pytest

from editlab.exceptions.errors import ContractError, DimensionError
from editlab.network import (
    ArchPreset,
    FrozenNorm,
    Network,
    accuracy,
    build_network,
    calibrate_norms,
    preset_editable_layers,
)
from editlab.shiftlab import LabeledData


class TestForwardComposition:
    def test_prefix_then_suffix_is_forward_mlp(self, tiny_mlp, rng):
        """Test that f>l(f<=l(x)) equals f(x) at every split of the MLP."""
        x = rng.uniform(size=(4, 3, 8, 8))
        full = tiny_mlp.forward(x).data
        for l in range(tiny_mlp.L + 1):
            split = tiny_mlp.forward_suffix(l, tiny_mlp.forward_prefix(l, x)).data
            np.testing.assert_allclose(split, full, rtol=0, atol=1e-12)

    def test_prefix_then_suffix_is_forward_cnn(self, tiny_cnn, rng):
        """Test the same composition on the convolutional preset."""
        x = rng.uniform(size=(3, 3, 14, 14))
        full = tiny_cnn.forward(x).data
        for l in range(tiny_cnn.L + 1):
            split = tiny_cnn.forward_suffix(l, tiny_cnn.forward_prefix(l, x)).data
            np.testing.assert_allclose(split, full, rtol=0, atol=1e-12)

    def test_prefix_zero_is_identity(self, tiny_mlp, rng):
        """Test that f<=0 returns its input."""
        x = rng.uniform(size=(2, 3, 8, 8))
        np.testing.assert_array_equal(tiny_mlp.forward_prefix(0, x).data, x)

    def test_wrong_input_shape(self, tiny_mlp, rng):
        """Test that a feature map of the wrong shape is rejected."""
        with pytest.raises(DimensionError):
            tiny_mlp.forward_suffix(2, rng.normal(size=(2, 7)))

    def test_layer_index_out_of_range(self, tiny_mlp, rng):
        """Test that indices outside [0, L] are rejected."""
        with pytest.raises(ContractError):
            tiny_mlp.forward_prefix(tiny_mlp.L + 1, rng.uniform(size=(1, 3, 8, 8)))

    def test_features_batches_match_forward(self, tiny_cnn, rng):
        """Test that batched feature extraction equals one full pass."""
        x = rng.uniform(size=(7, 3, 14, 14))
        np.testing.assert_allclose(tiny_cnn.features(0, 5, x, batch_size=3), tiny_cnn.forward_prefix(5, x).data)


class TestPresets:
    def test_cnn_small_layout(self):
        """Test layer numbering, editable and parameterized layers of cnn-small."""
        net = build_network(ArchPreset.CNN_SMALL, 10, seed=0)
        assert net.L == 10
        assert net.editable_indices == [1, 4, 8, 10]
        assert net.parameterized_indices == [1, 2, 4, 5, 8, 10]
        assert net.shapes[7] == (256,)
        assert net.num_classes == 10

    def test_mlp_small_784_input(self):
        """Test that a 1x28x28 input gives the 784-128-64-C stack."""
        net = build_network("mlp-small", 10, seed=0, input_shape=(1, 28, 28))
        widths = [net.layer(i).weight.shape for i in net.editable_indices]
        assert widths == [(128, 784), (64, 128), (10, 64)]

    def test_feature_depth_follows_block_tail(self, tiny_cnn, tiny_mlp):
        """Test that collision depths sit after norm and ReLU."""
        assert [tiny_cnn.feature_depth(i) for i in tiny_cnn.editable_indices] == [3, 6, 9, 10]
        assert [tiny_mlp.feature_depth(i) for i in tiny_mlp.editable_indices] == [3, 5, 6]

    def test_seed_reproducibility(self):
        """Test that equal seeds give equal weights and different seeds do not."""
        a = build_network("mlp-small", 3, seed=5, input_shape=(3, 8, 8), hidden=(4,))
        b = build_network("mlp-small", 3, seed=5, input_shape=(3, 8, 8), hidden=(4,))
        c = build_network("mlp-small", 3, seed=6, input_shape=(3, 8, 8), hidden=(4,))
        np.testing.assert_array_equal(a.layer(2).weight.data, b.layer(2).weight.data)
        assert not np.array_equal(a.layer(2).weight.data, c.layer(2).weight.data)

    def test_needs_two_classes(self):
        """Test that a one-class head is rejected."""
        with pytest.raises(ContractError):
            build_network("mlp-small", 1, seed=0)

    @pytest.mark.parametrize(
        "preset, input_shape, hidden",
        [
            ("mlp-small", (3, 8, 8), (6, 5)),
            ("mlp-small", (1, 28, 28), None),
            ("cnn-small", (3, 14, 14), (4, 5, 6)),
            ("cnn-small", (3, 32, 32), None),
        ],
    )
    def test_editable_layers_without_weights(self, preset, input_shape, hidden):
        """Test that the weight-free editable list matches a built network."""
        net = build_network(preset, 3, seed=0, input_shape=input_shape, hidden=hidden)
        assert preset_editable_layers(preset, input_shape, hidden) == net.editable_indices

    def test_editable_layers_reject_misfit_input(self):
        """Test that a 16x16 image does not fit the cnn-small strides."""
        with pytest.raises(DimensionError):
            preset_editable_layers("cnn-small", (3, 16, 16))


class TestParameters:
    def test_param_group_names(self, tiny_cnn):
        """Test that groups are named layers.<index>.<name> in canonical order."""
        names = [g.name for g in tiny_cnn.param_groups([1, 2])]
        assert names == ["layers.1.weight", "layers.1.bias", "layers.2.weight", "layers.2.bias"]

    def test_set_trainable_freezes_the_rest(self, tiny_mlp):
        """Test that only the selected layers require grad."""
        tiny_mlp.set_trainable([4])
        flags = {(i, name): t.requires_grad for i, name, t in tiny_mlp.named_parameters()}
        assert flags[(4, "weight")] and flags[(4, "bias")]
        assert not flags[(2, "weight")] and not flags[(6, "bias")]

    def test_copy_is_independent(self, tiny_mlp):
        """Test that changing a copy leaves the original alone."""
        clone = tiny_mlp.copy()
        clone.layer(2).weight.data[:] = 0.0
        assert np.any(tiny_mlp.layer(2).weight.data)

    def test_description_round_trip(self, tiny_cnn, rng):
        """Test that rebuilding from describe() keeps architecture and frozen statistics."""
        calibrate_norms(tiny_cnn, rng.uniform(size=(8, 3, 14, 14)))
        rebuilt = Network.from_description(tiny_cnn.describe())
        assert rebuilt.describe() == tiny_cnn.describe()
        np.testing.assert_array_equal(rebuilt.layer(2).running_var, tiny_cnn.layer(2).running_var)


class TestFrozenNorm:
    def test_calibration_standardizes_channels(self, tiny_cnn, rng):
        """Test that calibrated norms output zero-mean, unit-variance channels on the calibration set."""
        images = rng.uniform(size=(16, 3, 14, 14))
        calibrate_norms(tiny_cnn, images)
        out = tiny_cnn.features(0, 2, images)
        np.testing.assert_allclose(out.mean(axis=(0, 2, 3)), 0.0, atol=1e-8)
        np.testing.assert_allclose(out.var(axis=(0, 2, 3)), 1.0, atol=1e-3)

    def test_statistics_are_not_parameters(self, tiny_cnn):
        """Test that only weight and bias of a norm are exposed to optimizers."""
        norm = tiny_cnn.layer(2)
        assert isinstance(norm, FrozenNorm)
        assert list(norm.parameters()) == ["weight", "bias"]

    def test_calibration_needs_images(self, tiny_cnn):
        """Test that an empty calibration set is rejected."""
        with pytest.raises(ContractError):
            calibrate_norms(tiny_cnn, np.zeros((0, 3, 14, 14)))


class TestAccuracy:
    def test_accuracy_counts_argmax(self, tiny_mlp, rng):
        """Test accuracy against labels taken from the model's own predictions."""
        images = rng.uniform(size=(10, 3, 8, 8))
        predicted = np.argmax(tiny_mlp.logits(images), axis=1)
        labels = predicted.copy()
        labels[:3] = (labels[:3] + 1) % 3
        assert accuracy(tiny_mlp, LabeledData(images, labels)) == pytest.approx(0.7)

    def test_empty_dataset(self, tiny_mlp):
        """Test that accuracy of an empty set is undefined."""
        with pytest.raises(ContractError):
            accuracy(tiny_mlp, LabeledData(np.zeros((0, 3, 8, 8)), np.zeros(0)))
