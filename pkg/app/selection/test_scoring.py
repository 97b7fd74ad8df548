import numpy as np
import pytest

from app.exceptions import ContractViolation
from app.selection.scoring import (
    EPSILON,
    ClientUpdate,
    composite_score,
    magnitude_boosted_relevance,
    relevance_scores,
    similarity_matrix,
    update_variance,
)


def updates_from(*deltas):
    return [ClientUpdate(client_id=i, delta=np.asarray(d, dtype=float), num_samples=10) for i, d in enumerate(deltas)]


class TestClientUpdate:
    def test_rejects_non_finite(self):
        with pytest.raises(ContractViolation):
            ClientUpdate(client_id=0, delta=np.array([np.inf]), num_samples=1)

    def test_rejects_empty_client(self):
        with pytest.raises(ContractViolation):
            ClientUpdate(client_id=0, delta=np.zeros(2), num_samples=0)


class TestRelevance:
    def test_symmetric_pair(self):
        r = relevance_scores(updates_from((1, 0), (-1, 0)))
        np.testing.assert_allclose(r, [0.0, 0.0], atol=1e-6)

    def test_three_clients_on_a_line(self):
        r = relevance_scores(updates_from((0,), (1,), (2,)))

        raw = np.array([EPSILON / (1 + EPSILON), 1.0, EPSILON / (1 + EPSILON)])
        expected = (raw - raw.min()) / (raw.max() - raw.min() + EPSILON)
        np.testing.assert_allclose(r, expected)
        assert r[0] == pytest.approx(0.0, abs=1e-12)
        assert r[1] == pytest.approx(1.0, abs=1e-6)

    def test_range(self):
        rng = np.random.default_rng(0)
        r = relevance_scores(updates_from(*rng.normal(size=(15, 6))))
        assert np.all(r >= 0.0) and np.all(r < 1.0)

    def test_mismatched_lengths(self):
        with pytest.raises(ContractViolation):
            relevance_scores(updates_from((1, 0), (1,)))

    def test_no_updates(self):
        with pytest.raises(ContractViolation):
            relevance_scores([])


class TestSimilarity:
    def test_parallel_and_opposite(self):
        S = similarity_matrix(updates_from((1, 0), (2, 0), (-1, 0)))
        np.testing.assert_allclose(S, [[0, 1, -1], [1, 0, -1], [-1, -1, 0]])

    def test_orthogonal(self):
        S = similarity_matrix(updates_from((1, 0), (0, 3)))
        assert S[0, 1] == 0.0

    def test_zero_norm_update_is_dissimilar_to_everyone(self):
        S = similarity_matrix(updates_from((0, 0), (1, 1)))
        np.testing.assert_array_equal(S, np.zeros((2, 2)))

    def test_symmetric_bounded_zero_diagonal(self):
        rng = np.random.default_rng(1)
        S = similarity_matrix(updates_from(*rng.normal(size=(12, 5))))
        np.testing.assert_array_equal(S, S.T)
        np.testing.assert_array_equal(np.diag(S), np.zeros(12))
        assert np.all(np.abs(S) <= 1.0)


class TestMagnitudeBoost:
    def test_blend(self):
        boosted = magnitude_boosted_relevance(np.array([0.5, 1.0]), updates_from((1, 0), (0, 2)), gamma=0.3)
        np.testing.assert_allclose(boosted, [0.50, 1.00], atol=1e-8)

    def test_single_client_limit(self):
        boosted = magnitude_boosted_relevance(np.array([0.0]), updates_from((3, 4)), gamma=1.0)
        assert boosted[0] == pytest.approx(1.0)

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            magnitude_boosted_relevance(np.array([0.5]), updates_from((1,), (2,)), gamma=0.3)


class TestUpdateVariance:
    def test_single_client(self):
        assert update_variance(updates_from((4, -1))) == 0.0

    def test_two_clients(self):
        assert update_variance(updates_from((0, 0), (2, 2))) == pytest.approx(1.0)

    def test_three_clients_population_std(self):
        assert update_variance(updates_from((0,), (1,), (2,))) == pytest.approx(np.sqrt(2 / 3))

    def test_empty(self):
        with pytest.raises(ContractViolation):
            update_variance([])


def test_composite_score():
    assert composite_score(0.9, 0.4, 0.5, (1.0, 0.01, 0.001)) == pytest.approx(0.9 + 0.004 - 0.0005)
    assert composite_score(0.5, 0.0, 0.0, (2.0, 1.0, 1.0)) == pytest.approx(1.0)
