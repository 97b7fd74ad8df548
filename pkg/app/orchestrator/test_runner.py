import numpy as np
import pytest

from app.exceptions import ContractViolation
from app.federated.client import TrainConfig
from app.federated.datasets import federate
from app.ingestion.synthetic import synth_blobs
from app.orchestrator.runner import run_experiment
from app.qubo.solver import AnnealParams
from app.selection.builder import SelectionParams

N_CLIENTS = 6


@pytest.fixture(scope="module")
def datasets():
    train = synth_blobs(classes=3, dims=5, per_class=60, spread=0.15, seed=0)
    test = synth_blobs(classes=3, dims=5, per_class=10, spread=0.15, seed=1)
    return federate(train, test, n_clients=N_CLIENTS, alpha=0.5, seed=0)


@pytest.fixture
def cfg():
    return TrainConfig(rounds=3, local_iterations=4, batch_size=8, hidden_units=8)


PARAMS = SelectionParams(k=2, max_selections=10)
ANNEAL = AnnealParams(restarts=2)


def test_zero_rounds(datasets, cfg):
    cfg = cfg.model_copy(update={"rounds": 0})
    assert run_experiment(cfg, "qubo", PARAMS, datasets, 0, anneal=ANNEAL) == []


def test_full_participation_has_no_privacy(datasets, cfg):
    records = run_experiment(cfg, "fedavg_full", PARAMS, datasets, 0)
    assert [r.round for r in records] == [0, 1, 2]
    for r in records:
        assert r.selected == tuple(range(N_CLIENTS))
        assert r.per_round_privacy == 0.0
        assert r.winning_strategy == "n/a"
        assert 0.0 <= r.accuracy <= 1.0


def test_qubo_rounds(datasets, cfg):
    records = run_experiment(cfg, "qubo", PARAMS, datasets, 0, anneal=ANNEAL)
    assert len(records) == 3
    for r in records:
        assert 1 <= len(r.selected) <= N_CLIENTS
        assert list(r.selected) == sorted(set(r.selected))
        assert r.winning_strategy != "n/a"
        assert r.per_round_privacy == pytest.approx(1 - len(r.selected) / N_CLIENTS)


def test_qubo_run_is_deterministic(datasets, cfg):
    a = run_experiment(cfg, "qubo", PARAMS, datasets, 4, anneal=ANNEAL)
    b = run_experiment(cfg, "qubo", PARAMS, datasets, 4, anneal=ANNEAL)
    assert a == b


def test_selection_cap_caps_every_client(datasets, cfg):
    cfg = cfg.model_copy(update={"rounds": 8})
    params = PARAMS.model_copy(update={"max_selections": 1})
    records = run_experiment(cfg, "qubo", params, datasets, 0, anneal=ANNEAL)
    counts = np.bincount([c for r in records for c in r.selected], minlength=N_CLIENTS)
    assert counts.max() <= 1
    # once everyone is capped the remaining rounds aggregate nothing
    assert all(r.selected == () and r.winning_strategy == "n/a" for r in records if r.round >= N_CLIENTS)


def test_random_baseline_replays_reference_sizes(datasets, cfg):
    sizes = [1, 4, 2]
    a = run_experiment(cfg, "random", PARAMS, datasets, 3, reference_sizes=sizes)
    b = run_experiment(cfg, "random", PARAMS, datasets, 3, reference_sizes=sizes)
    assert [len(r.selected) for r in a] == sizes
    assert [r.selected for r in a] == [r.selected for r in b]


def test_random_baseline_defaults_to_k(datasets, cfg):
    records = run_experiment(cfg, "random", PARAMS, datasets, 0)
    assert all(len(r.selected) == PARAMS.k for r in records)


def test_unknown_method(datasets, cfg):
    with pytest.raises(ContractViolation):
        run_experiment(cfg, "fedprox", PARAMS, datasets, 0)
