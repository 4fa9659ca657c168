import numpy as np
import pytest
from pydantic import ValidationError

from editlab.exceptions.errors import ContractError
from editlab.tensorcore import ParamGroup, SgdConfig, Tensor, sgd_step, zero_grad


class TestSgdStep:
    def test_first_step_with_weight_decay(self):
        """Test that a weight-class parameter moves by lr * (grad + decay * p)."""
        p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
        group = ParamGroup("layers.1.weight", p)
        p.grad = np.array([0.5, 0.5])
        sgd_step([group], SgdConfig(learning_rate=0.1, momentum=0.9, weight_decay=0.01))
        expected = np.array([1.0, -2.0]) - 0.1 * (np.array([0.5, 0.5]) + 0.01 * np.array([1.0, -2.0]))
        np.testing.assert_allclose(p.data, expected)

    def test_bias_is_not_decayed(self):
        """Test that parameters without "weight" in the name skip weight decay."""
        p = Tensor(np.array([3.0]), requires_grad=True)
        group = ParamGroup("layers.2.bias", p)
        p.grad = np.array([0.0])
        sgd_step([group], SgdConfig(learning_rate=0.1, weight_decay=0.5))
        np.testing.assert_array_equal(p.data, [3.0])

    def test_lowrank_factors_are_not_decayed(self):
        """Test that low-rank factor names do not trigger decay."""
        assert not ParamGroup("lowrank.U", Tensor(np.zeros(1))).decays
        assert ParamGroup("layers.2.weight", Tensor(np.zeros(1))).decays

    def test_momentum_accumulates(self):
        """Test that the second step uses momentum * v + g."""
        p = Tensor(np.array([0.0]), requires_grad=True)
        group = ParamGroup("layers.1.bias", p)
        cfg = SgdConfig(learning_rate=1.0, momentum=0.9, weight_decay=0.0)
        for _ in range(2):
            p.grad = np.array([1.0])
            sgd_step([group], cfg)
        np.testing.assert_allclose(p.data, [-(1.0 + 1.9)])

    def test_missing_gradient_is_rejected(self):
        """Test that a parameter without a gradient is a contract violation."""
        group = ParamGroup("layers.1.weight", Tensor(np.ones(2), requires_grad=True))
        with pytest.raises(ContractError, match="no gradient"):
            sgd_step([group], SgdConfig(learning_rate=0.1))

    def test_zero_grad_on_groups(self):
        """Test that zero_grad resets every group's gradient."""
        groups = [ParamGroup(f"layers.{i}.weight", Tensor(np.ones(2), requires_grad=True)) for i in (1, 2)]
        for g in groups:
            g.tensor.grad = np.ones(2)
        zero_grad(groups)
        assert all(not np.any(g.tensor.grad) for g in groups)


class TestSgdConfig:
    def test_defaults(self):
        """Test the default momentum and decay."""
        cfg = SgdConfig(learning_rate=0.01)
        assert cfg.momentum == 0.9
        assert cfg.weight_decay == 1e-4

    def test_rejects_negative_learning_rate(self):
        """Test that a negative learning rate fails validation."""
        with pytest.raises(ValidationError):
            SgdConfig(learning_rate=-1.0)
