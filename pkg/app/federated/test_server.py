import numpy as np
import pytest

from app.exceptions import ContractViolation
from app.federated.client import ClientDataset
from app.federated.model import GlobalModel, ModelArch, init_model
from app.federated.server import evaluate, fedavg_aggregate
from app.selection.scoring import ClientUpdate

ARCH = ModelArch.mlp(4, 3, hidden=5)


def model():
    return init_model(ARCH, 0)


def update(cid, delta, samples=10):
    return ClientUpdate(client_id=cid, delta=delta, num_samples=samples)


class TestFedAvg:
    def test_single_client_full_step(self):
        g = model()
        d = np.random.default_rng(0).normal(size=ARCH.param_count)
        out = fedavg_aggregate(g, [update(0, d)], {0}, server_lr=1.0)
        np.testing.assert_allclose(out.params, g.params + d)

    def test_sample_weighting(self):
        g = model()
        d = np.random.default_rng(1).normal(size=ARCH.param_count)
        out = fedavg_aggregate(g, [update(0, d, 1), update(1, np.zeros_like(d), 3)], {0, 1}, server_lr=1.0)
        np.testing.assert_allclose(out.params, g.params + 0.25 * d)

    def test_zero_deltas(self):
        g = model()
        zeros = [update(i, np.zeros(ARCH.param_count)) for i in range(3)]
        np.testing.assert_array_equal(fedavg_aggregate(g, zeros, {0, 1, 2}, 0.5).params, g.params)

    def test_equal_sizes_give_the_scaled_mean(self):
        g = model()
        rng = np.random.default_rng(2)
        updates = [update(i, rng.normal(size=ARCH.param_count)) for i in range(4)]
        out = fedavg_aggregate(g, updates, range(4), server_lr=0.065)
        mean = np.mean([u.delta for u in updates], axis=0)
        np.testing.assert_allclose(out.params, g.params + 0.065 * mean)

    def test_order_of_updates_does_not_matter(self):
        g = model()
        rng = np.random.default_rng(3)
        updates = [update(i, rng.normal(size=ARCH.param_count), int(rng.integers(1, 20))) for i in range(5)]
        a = fedavg_aggregate(g, updates, {0, 2, 4}, 0.082)
        b = fedavg_aggregate(g, updates[::-1], [4, 0, 2], 0.082)
        np.testing.assert_array_equal(a.params, b.params)

    def test_unselected_clients_are_ignored(self):
        g = model()
        d = np.ones(ARCH.param_count)
        out = fedavg_aggregate(g, [update(0, d), update(1, 100 * d)], {0}, 1.0)
        np.testing.assert_allclose(out.params, g.params + d)

    def test_empty_selection(self):
        with pytest.raises(ContractViolation):
            fedavg_aggregate(model(), [update(0, np.zeros(ARCH.param_count))], set(), 1.0)

    def test_unknown_client(self):
        with pytest.raises(ContractViolation):
            fedavg_aggregate(model(), [update(0, np.zeros(ARCH.param_count))], {0, 7}, 1.0)


class TestEvaluate:
    def test_identity_classifier(self):
        arch = ModelArch((2, 2))
        g = GlobalModel(params=np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]), arch=arch)
        X = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert evaluate(g, ClientDataset(X, np.array([0, 1])))[0] == 1.0
        assert evaluate(g, ClientDataset(X, np.array([1, 1])))[0] == 0.5

    def test_uniform_model_loss(self):
        g = GlobalModel(params=np.zeros(ARCH.param_count), arch=ARCH)
        X = np.random.default_rng(0).uniform(size=(6, 4))
        accuracy, loss = evaluate(g, ClientDataset(X, np.array([0, 1, 2, 0, 1, 2])))
        assert loss == pytest.approx(np.log(3))
        # all logits tie, so argmax predicts class 0
        assert accuracy == pytest.approx(2 / 6)

    def test_empty_test_set(self):
        with pytest.raises(ContractViolation):
            evaluate(model(), ClientDataset(np.zeros((0, 4)), np.zeros(0, dtype=int)))
