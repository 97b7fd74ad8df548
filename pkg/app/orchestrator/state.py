from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple, TypedDict

from app.federated.client import TrainConfig
from app.federated.datasets import FederatedDatasets
from app.federated.model import GlobalModel
from app.qubo.solver import AnnealParams
from app.selection.builder import SelectionParams, SelectionState
from app.selection.scoring import ClientUpdate
from app.selection.strategies import StrategyConfig

Method = Literal["fedavg_full", "qubo", "random"]
METHODS: Tuple[str, ...] = ("fedavg_full", "qubo", "random")


@dataclass
class RunContext:
    """Everything a round needs that is fixed for the whole run."""

    method: str
    cfg: TrainConfig
    datasets: FederatedDatasets
    selection_params: SelectionParams
    bank: Sequence[StrategyConfig]
    anneal: AnnealParams
    selection_state: SelectionState
    # per-round QUBO selection sizes, matched by the random baseline
    reference_sizes: Optional[Sequence[int]] = None
    records: List = field(default_factory=list)


# LangGraph state must be a TypedDict (dict-style access in nodes)
class RoundState(TypedDict, total=False):
    round_index: int
    context: RunContext
    global_model: GlobalModel
    updates: List[ClientUpdate]
    selected: Tuple[int, ...]
    winning_strategy: str
    server_lr: float
    gradient_variance: float
    accuracy: float
    loss: float
    trace: List[dict]
    metrics: dict


def initial_round_state(round_index: int, context: RunContext, global_model: GlobalModel) -> RoundState:
    return RoundState(
        round_index=round_index,
        context=context,
        global_model=global_model,
        updates=[],
        selected=(),
        winning_strategy="n/a",
        server_lr=context.cfg.server_lr_fedavg,
        gradient_variance=0.0,
        accuracy=0.0,
        loss=0.0,
        trace=[],
        metrics={"node_latency_ms": {}},
    )
