import numpy as np
import pytest

from app.exceptions import ContractViolation
from app.federated.model import GlobalModel, ModelArch, cross_entropy, init_model, loss_and_grad


def finite_difference(arch, params, X, y, h=1e-6):
    grad = np.zeros_like(params)
    for i in range(params.shape[0]):
        up, down = params.copy(), params.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (cross_entropy(arch, up, X, y) - cross_entropy(arch, down, X, y)) / (2 * h)
    return grad


class TestArch:
    def test_param_count(self):
        assert ModelArch.mlp(5, 3, hidden=4).param_count == 5 * 4 + 4 + 4 * 3 + 3

    def test_unpack_order_is_weights_then_bias(self):
        arch = ModelArch((2, 3))
        params = np.arange(arch.param_count, dtype=float)
        (W, b), = arch.unpack(params)
        np.testing.assert_array_equal(W, [[0, 1, 2], [3, 4, 5]])
        np.testing.assert_array_equal(b, [6, 7, 8])

    def test_rejects_single_layer(self):
        with pytest.raises(ContractViolation):
            ModelArch((4,))

    def test_model_checks_parameter_count(self):
        with pytest.raises(ContractViolation):
            GlobalModel(params=np.zeros(3), arch=ModelArch((2, 3)))


class TestInit:
    def test_deterministic(self):
        arch = ModelArch.mlp(6, 3, hidden=5)
        np.testing.assert_array_equal(init_model(arch, 4).params, init_model(arch, 4).params)
        assert not np.array_equal(init_model(arch, 4).params, init_model(arch, 5).params)

    def test_biases_start_at_zero(self):
        arch = ModelArch.mlp(6, 3, hidden=5)
        for _, b in arch.unpack(init_model(arch, 0).params):
            np.testing.assert_array_equal(b, 0.0)


class TestLossAndGrad:
    def test_uniform_prediction_loss(self):
        arch = ModelArch.mlp(5, 3, hidden=4)
        X = np.random.default_rng(0).uniform(size=(10, 5))
        y = np.arange(10) % 3
        loss, _ = loss_and_grad(arch, np.zeros(arch.param_count), X, y)
        assert loss == pytest.approx(np.log(3))

    @pytest.mark.parametrize("layers", [(5, 3), (5, 4, 3), (5, 6, 4, 3)])
    def test_gradient_matches_finite_differences(self, layers):
        arch = ModelArch(layers)
        for seed in range(5):
            rng = np.random.default_rng(seed)
            params = init_model(arch, seed).params.copy()
            params += rng.normal(0.0, 0.1, size=params.shape)  # non-zero biases too
            X = rng.uniform(size=(8, 5))
            y = rng.integers(0, 3, size=8)

            loss, grad = loss_and_grad(arch, params, X, y)
            numeric = finite_difference(arch, params, X, y)

            assert loss == pytest.approx(cross_entropy(arch, params, X, y))
            # per component, floored so near-zero entries compare absolutely
            rel = np.abs(grad - numeric) / np.maximum(np.abs(grad) + np.abs(numeric), 1e-4)
            assert rel.max() < 1e-4
