import logging
import time
from typing import List, Optional, Sequence

from app.exceptions import ContractViolation
from app.federated.client import TrainConfig
from app.federated.datasets import FederatedDatasets
from app.federated.model import GlobalModel, ModelArch, init_model
from app.orchestrator.graph import graph
from app.orchestrator.state import METHODS, RunContext, initial_round_state
from app.qubo.solver import AnnealParams
from app.selection.builder import SelectionParams, SelectionState
from app.selection.strategies import StrategyConfig, strategy_bank
from app.services.metrics_service import RoundRecord

logger = logging.getLogger(__name__)


def run_experiment(
    cfg: TrainConfig,
    method: str,
    selection_params: SelectionParams,
    datasets: FederatedDatasets,
    seed: int,
    *,
    bank: Optional[Sequence[StrategyConfig]] = None,
    anneal: Optional[AnnealParams] = None,
    reference_sizes: Optional[Sequence[int]] = None,
    initial_model: Optional[GlobalModel] = None,
) -> List[RoundRecord]:
    """Run `cfg.rounds` federated rounds with one aggregation method.

    `reference_sizes` gives the random baseline its per-round sample size
    (the QUBO run's selection sizes); without it the baseline draws k.
    """
    if method not in METHODS:
        raise ContractViolation(f"unknown method {method!r}, expected one of {METHODS}")

    cfg = cfg.model_copy(update={"seed": seed})
    if initial_model is None:
        arch = ModelArch.mlp(datasets.input_dim, datasets.classes, cfg.hidden_units)
        initial_model = init_model(arch, seed)

    context = RunContext(
        method=method,
        cfg=cfg,
        datasets=datasets,
        selection_params=selection_params,
        bank=list(bank) if bank is not None else strategy_bank("mnist"),
        anneal=anneal or AnnealParams(seed=seed),
        selection_state=SelectionState.fresh(datasets.n_clients),
        reference_sizes=reference_sizes,
    )

    start = time.time()
    model = initial_model
    for t in range(cfg.rounds):
        result = graph.invoke(initial_round_state(t, context, model))
        model = result["global_model"]

    logger.info(
        f"[{method}] seed={seed}: {cfg.rounds} rounds over {datasets.n_clients} clients "
        f"in {time.time() - start:.1f}s"
    )
    return list(context.records)
