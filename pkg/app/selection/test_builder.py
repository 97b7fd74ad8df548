import numpy as np
import pytest

from app.exceptions import ContractViolation
from app.qubo.matrix import minimum_energy_set, solve_exact
from app.selection.builder import (
    ANTI_CLUSTER_WEIGHT,
    SelectionParams,
    SelectionState,
    apply_max_selection_exclusion,
    build_qubo,
)
from app.selection.scoring import ClientUpdate, relevance_scores, similarity_matrix
from app.selection.strategies import StrategyConfig, strategy_bank

BANK = {s.name: s for s in strategy_bank("mnist")}


def random_similarity(n, rng):
    S = rng.uniform(-1.0, 1.0, size=(n, n))
    S = 0.5 * (S + S.T)
    np.fill_diagonal(S, 0.0)
    return S


class TestBuildQubo:
    def test_entries(self):
        params = SelectionParams(beta_r=3.0, k=2)
        strat = BANK["Balanced"]
        r = np.array([0.0, 0.5, 1.0])
        S = np.array([[0.0, 0.2, -0.4], [0.2, 0.0, 0.6], [-0.4, 0.6, 0.0]])
        q = build_qubo(r, S, strat, params)

        np.testing.assert_allclose(np.diag(q.coeffs), -3.0 * r + 0.5 * (1 - 4))
        assert q.pair_coefficient(0, 1) == pytest.approx(2 * 0.5 + 0.15 * 0.2)
        assert q.pair_coefficient(0, 2) == pytest.approx(2 * 0.5 - 0.15 * 0.4)
        assert q.coeffs[1, 2] == q.coeffs[2, 1]

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolation):
            build_qubo(np.zeros(3), np.zeros((2, 2)), BANK["Balanced"], SelectionParams())

    def test_fairness_penalty(self):
        params = SelectionParams(beta_r=2.0, k=1, max_selections=4, fairness_mode=True, fairness_weight=0.5)
        counts = np.array([0, 2, 4])
        plain = build_qubo(np.zeros(3), np.zeros((3, 3)), BANK["Balanced"], params.model_copy(update={"fairness_mode": False}))
        fair = build_qubo(np.zeros(3), np.zeros((3, 3)), BANK["Balanced"], params, counts)
        np.testing.assert_allclose(np.diag(fair.coeffs) - np.diag(plain.coeffs), 0.5 * counts / 4 * 2.0)

    def test_fairness_counts_ignored_when_mode_off(self):
        q = build_qubo(np.zeros(2), np.zeros((2, 2)), BANK["Balanced"], SelectionParams(k=1), np.array([5, 5]))
        np.testing.assert_allclose(np.diag(q.coeffs), [-0.5, -0.5])

    def test_anti_clustering_raises_pair_weight_above_tau(self):
        params = SelectionParams(tau=0.9)
        S = np.array([[0.0, 0.95, 0.5], [0.95, 0.0, 0.1], [0.5, 0.1, 0.0]])
        r = np.zeros(3)
        for name in ("Max-Consensus", "Ultra-Consensus"):
            strat = BANK[name]
            assert strat.lambda_r_s < ANTI_CLUSTER_WEIGHT
            plain = strat.model_copy(update={"anti_clustering": False})
            q_anti = build_qubo(r, S, strat, params)
            q_plain = build_qubo(r, S, plain, params)

            assert q_anti.pair_coefficient(0, 1) > q_plain.pair_coefficient(0, 1)
            assert q_anti.pair_coefficient(0, 1) == pytest.approx(2 * strat.lambda_c + ANTI_CLUSTER_WEIGHT * 0.95)
            # below tau the table weight applies
            assert q_anti.pair_coefficient(0, 2) == q_plain.pair_coefficient(0, 2)


class TestCardinality:
    def test_zero_relevance_minimizers_are_the_k_hot_vectors(self):
        q = build_qubo(np.zeros(8), np.zeros((8, 8)), BANK["Balanced"], SelectionParams(k=3))
        minimizers = minimum_energy_set(q)
        assert len(minimizers) == 56
        assert all(sum(x) == 3 for x in minimizers)
        np.testing.assert_array_equal(solve_exact(q), [0, 0, 0, 0, 0, 1, 1, 1])

    def test_constant_relevance_selects_exactly_k(self):
        params = SelectionParams(beta_r=3.0, k=4)
        for seed in range(50):
            rng = np.random.default_rng(seed)
            lam_c = rng.uniform(params.beta_r, 2 * params.beta_r)
            strat = StrategyConfig(name="Custom", lambda_r_s=0.1, lambda_c=lam_c)
            r = np.full(12, rng.uniform(0.0, 1.0))
            assert int(solve_exact(build_qubo(r, np.zeros((12, 12)), strat, params)).sum()) == 4

    def test_top_k_recovery(self):
        params = SelectionParams(beta_r=3.0, k=4)
        strat = StrategyConfig(name="Custom", lambda_r_s=0.1, lambda_c=10 * params.beta_r)
        for seed in range(50):
            rng = np.random.default_rng(seed)
            r = rng.permutation(np.linspace(0.0, 0.99, 12))
            x = solve_exact(build_qubo(r, np.zeros((12, 12)), strat, params))
            assert set(np.flatnonzero(x)) == set(np.argsort(-r)[:4])

    def test_pull_toward_k_tightens_with_lambda_c(self):
        params = SelectionParams(beta_r=3.0, k=4)
        multipliers = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0]
        deviations = {m: 0 for m in multipliers}
        for seed in range(100):
            rng = np.random.default_rng(seed)
            r = rng.uniform(0.0, 1.0, size=12)
            S = random_similarity(12, rng)
            for m in multipliers:
                strat = StrategyConfig(name="Custom", lambda_r_s=0.4, lambda_c=m * params.beta_r)
                size = int(solve_exact(build_qubo(r, S, strat, params)).sum())
                if m >= 1.0:
                    assert abs(size - params.k) <= 1
                deviations[m] += size != params.k

        counts = [deviations[m] for m in multipliers]
        assert counts == sorted(counts, reverse=True)


def two_cluster_updates(seed, noise=0.01, dim=20):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=dim)
    b = rng.normal(size=dim)
    b -= (a @ b) / (a @ a) * a
    a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
    deltas = [c + noise * rng.normal(size=dim) for c in (a, a, a, a, b, b, b, b)]
    return [ClientUpdate(client_id=i, delta=d, num_samples=10) for i, d in enumerate(deltas)]


def test_diversity_optimum_spans_both_clusters():
    params = SelectionParams(k=2)
    cross = 0
    for seed in range(50):
        S = similarity_matrix(two_cluster_updates(seed))
        # equal relevance isolates the redundancy term
        q = build_qubo(np.full(8, 0.5), S, BANK["Max-Diversity"], params)
        if all(any(x[:4]) and any(x[4:]) for x in minimum_energy_set(q)):
            cross += 1
    assert cross >= 48


def test_diversity_optimum_spans_both_clusters_with_computed_relevance():
    params = SelectionParams(k=2)
    cross = 0
    for seed in range(50):
        updates = two_cluster_updates(seed)
        q = build_qubo(relevance_scores(updates), similarity_matrix(updates), BANK["Max-Diversity"], params)
        if all(any(x[:4]) and any(x[4:]) for x in minimum_energy_set(q)):
            cross += 1
    assert cross >= 48


class TestExclusion:
    def test_nothing_capped(self):
        assert apply_max_selection_exclusion(SelectionState.fresh(3), 10) == set()

    def test_capped_clients(self):
        state = SelectionState(counts=np.array([10, 3, 12]))
        assert apply_max_selection_exclusion(state, 10) == {0, 2}

    def test_record(self):
        state = SelectionState.fresh(4)
        state.record([1, 3])
        state.record([3])
        np.testing.assert_array_equal(state.counts, [0, 1, 0, 2])
        assert state.round_index == 2
