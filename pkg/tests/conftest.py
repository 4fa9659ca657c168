import numpy as np
import pytest

from editlab.config import EditLabConfig
from editlab.editors import EditConfig
from editlab.harness import (
    DataSection,
    EditingSection,
    EditTaskSection,
    ExperimentConfig,
    ModelSection,
    TrainingSection,
)
from editlab.network import Dense, Network, build_network
from editlab.shiftlab import (
    EditDataset,
    LabeledData,
    RegionSpec,
    SplitPolicy,
    TripleSet,
    build_edit_dataset,
    generate_base,
    generate_edit_task,
)


@pytest.fixture
def rng():
    """Provides a fixed-seed generator."""
    return np.random.default_rng(0)


@pytest.fixture
def tiny_mlp():
    """Provides an mlp-small network on 3x8x8 inputs: Flatten, Dense(192->6), ReLU, Dense(6->5), ReLU, Dense(5->3)."""
    return build_network("mlp-small", 3, seed=0, input_shape=(3, 8, 8), hidden=(6, 5))


@pytest.fixture
def tiny_cnn():
    """Provides a cnn-small network on 3x14x14 inputs (conv maps 6x6 then 2x2)."""
    return build_network("cnn-small", 3, seed=0, input_shape=(3, 14, 14), hidden=(4, 5, 6))


@pytest.fixture
def base_small():
    """Provides a 3-class procedural dataset of 8x8 images, 12 per class."""
    return generate_base(seed=1, class_count=3, samples_per_class=12, image_size=8)


@pytest.fixture
def base_cnn():
    """Provides a 3-class procedural dataset of 14x14 images, 12 per class."""
    return generate_base(seed=2, class_count=3, samples_per_class=12, image_size=14)


@pytest.fixture
def split_policy():
    """Provides a split policy with three training images per class."""
    return SplitPolicy(n_train=3, min_train_ratio=0.5, s_train=1, seed=0)


@pytest.fixture
def edit_pairs(base_small, split_policy):
    """Provides background-to-snow edit pairs over base_small with two style variants."""
    triples = generate_edit_task(base_small, RegionSpec.parse("background"), "snow", 2)
    return build_edit_dataset(triples, split_policy, concept="background", style="snow")


@pytest.fixture
def edit_pairs_cnn(base_cnn, split_policy):
    """Provides background-to-snow edit pairs over base_cnn with two style variants."""
    triples = generate_edit_task(base_cnn, RegionSpec.parse("background"), "snow", 2)
    return build_edit_dataset(triples, split_policy)


@pytest.fixture
def labeled_small(base_small):
    """Provides base_small as (images, labels)."""
    return LabeledData(base_small.images, base_small.labels)


@pytest.fixture
def quick_edit_config():
    """Provides a short editing run on layer 4 of tiny_mlp."""
    return EditConfig(layer=4, learning_rate=0.05, max_epochs=5, seed=3)


@pytest.fixture
def tiny_experiment(tmp_path):
    """Provides a seconds-long collision experiment: 3 classes of 8x8 images, two layers, three rates."""
    return ExperimentConfig(
        data=DataSection(
            class_count=3, samples_per_class=8, val_samples_per_class=4, edit_pool_per_class=8, image_size=8
        ),
        edit_task=EditTaskSection(style_variants=1, n_train=2, min_region_fraction=0.0),
        model=ModelSection(preset="mlp-small", hidden=[6, 5]),
        training=TrainingSection(epochs=2, batch_size=8, calibration_samples=16),
        editing=EditingSection(
            method="local_ft_collision",
            layers=[2, 4],
            lr_grid=[1e-3, 1e-2, 1e-1],
            restarts=1,
            max_epochs=3,
        ),
        alphas=[0.0, 0.5, 1.0],
        shifts=["gaussian_noise:2"],
        output_dir=str(tmp_path / "run"),
        seed=11,
    )


@pytest.fixture
def quiet_settings():
    """Provides settings that leave logging configuration to pytest."""
    return EditLabConfig(log_runs=False)


@pytest.fixture
def single_dense():
    """Provides a one-layer linear classifier Dense(4->3) whose row 0 dominates along e1."""
    weight = np.array([[5.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
    return Network([Dense(weight, np.zeros(3))], input_shape=(4,))


@pytest.fixture
def orthogonal_pair():
    """Provides one edit pair x = e1, x' = x + d with d orthogonal to x, label 0; val is the train pair."""
    x = np.array([1.0, 0.0, 0.0, 0.0])
    d = np.array([0.0, 0.3, -0.2, 0.1])
    pairs = TripleSet(x[None], (x + d)[None], np.array([0]), np.array([0]), np.array([0]))
    return EditDataset(pairs, pairs)
