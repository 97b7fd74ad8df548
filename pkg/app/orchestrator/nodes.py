import logging
import time
from typing import Sequence

import numpy as np

from app.exceptions import InfeasibleRoundError
from app.federated.client import local_train
from app.federated.model import GlobalModel
from app.federated.server import evaluate, fedavg_aggregate
from app.orchestrator.state import RoundState
from app.qubo.solver import AnnealParams
from app.selection.scoring import ClientUpdate
from app.selection.selector import select_clients
from app.services.metrics_service import NO_STRATEGY, RoundRecord, gradient_variance, per_round_privacy

logger = logging.getLogger(__name__)

RANDOM_STREAM = 0x5EED


def _timed(state: RoundState, node: str, start: float) -> int:
    duration = int((time.time() - start) * 1000)
    state["metrics"]["node_latency_ms"][node] = duration
    return duration


def _round_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


# =========================================
# 1️⃣ LOCAL TRAINING
# =========================================
def train_clients_node(state: RoundState) -> RoundState:
    start = time.time()
    ctx = state["context"]
    t = state["round_index"]

    state["updates"] = [
        local_train(state["global_model"], data, ctx.cfg, client_id=cid, round_index=t)
        for cid, data in enumerate(ctx.datasets.clients)
    ]

    state["trace"].append({
        "node": "train_clients",
        "clients": len(state["updates"]),
        "duration_ms": _timed(state, "train_clients", start),
    })
    return state


def route_by_method(state: RoundState) -> str:
    return state["context"].method


# =========================================
# 2️⃣ SELECTION (one node per method)
# =========================================
def select_all_node(state: RoundState) -> RoundState:
    ctx = state["context"]
    state["selected"] = tuple(range(ctx.datasets.n_clients))
    state["server_lr"] = ctx.cfg.server_lr_fedavg
    state["trace"].append({"node": "select_all", "n_selected": len(state["selected"])})
    return state


def select_qubo_node(state: RoundState) -> RoundState:
    start = time.time()
    ctx = state["context"]
    t = state["round_index"]
    validation = ctx.datasets.validation
    server_lr = ctx.cfg.server_lr_qubo

    def trial_accuracy(model: GlobalModel, members: Sequence[ClientUpdate]) -> float:
        trial = fedavg_aggregate(model, members, [u.client_id for u in members], server_lr)
        accuracy, _ = evaluate(trial, validation)
        return accuracy

    anneal = ctx.anneal.model_copy(update={"seed": _round_seed(ctx.anneal.seed, ctx.cfg.seed, t)})

    try:
        outcome = select_clients(
            state["global_model"],
            state["updates"],
            ctx.selection_params,
            ctx.selection_state,
            trial_accuracy,
            ctx.bank,
            anneal,
        )
        state["selected"] = tuple(sorted(outcome.selected))
        state["winning_strategy"] = outcome.winning_strategy
        state["metrics"]["strategy_scores"] = {
            name: s.model_dump() for name, s in outcome.per_strategy_scores.items()
        }
        state["metrics"]["strategy_trace"] = outcome.trace
    except InfeasibleRoundError as e:
        # nobody is eligible: the round aggregates nothing
        logger.warning(f"round {t}: {e}; skipping aggregation")
        ctx.selection_state.round_index += 1
        state["selected"] = ()
        state["winning_strategy"] = NO_STRATEGY

    state["server_lr"] = server_lr
    state["trace"].append({
        "node": "select_qubo",
        "winner": state["winning_strategy"],
        "n_selected": len(state["selected"]),
        "duration_ms": _timed(state, "select_qubo", start),
    })
    return state


def select_random_node(state: RoundState) -> RoundState:
    ctx = state["context"]
    t = state["round_index"]
    n = ctx.datasets.n_clients

    if ctx.reference_sizes is not None and t < len(ctx.reference_sizes):
        size = int(ctx.reference_sizes[t])
    else:
        size = ctx.selection_params.k
    size = min(size, n)

    rng = np.random.default_rng([ctx.cfg.seed, t, RANDOM_STREAM])
    state["selected"] = tuple(sorted(int(i) for i in rng.choice(n, size=size, replace=False)))
    state["server_lr"] = ctx.cfg.server_lr_fedavg
    state["trace"].append({"node": "select_random", "n_selected": size})
    return state


# =========================================
# 3️⃣ AGGREGATION + EVALUATION
# =========================================
def aggregate_node(state: RoundState) -> RoundState:
    start = time.time()
    selected = state["selected"]

    if selected:
        state["global_model"] = fedavg_aggregate(
            state["global_model"], state["updates"], selected, state["server_lr"]
        )
        state["gradient_variance"] = gradient_variance(state["updates"], selected)
    else:
        state["gradient_variance"] = 0.0

    state["trace"].append({
        "node": "aggregate",
        "server_lr": state["server_lr"],
        "duration_ms": _timed(state, "aggregate", start),
    })
    return state


def evaluate_node(state: RoundState) -> RoundState:
    ctx = state["context"]
    n = ctx.datasets.n_clients
    accuracy, loss = evaluate(state["global_model"], ctx.datasets.test)
    state["accuracy"], state["loss"] = accuracy, loss

    record = RoundRecord(
        round=state["round_index"],
        n_clients=n,
        selected=state["selected"],
        winning_strategy=state["winning_strategy"],
        accuracy=accuracy,
        loss=loss,
        per_round_privacy=per_round_privacy(len(state["selected"]), n),
        gradient_variance=state["gradient_variance"],
    )
    ctx.records.append(record)

    logger.info(
        f"[{ctx.method}] round {record.round}: acc={accuracy:.4f} loss={loss:.4f} "
        f"selected={len(record.selected)}/{n} strategy={record.winning_strategy}"
    )
    logger.debug(f"[{ctx.method}] round {record.round} trace: {state['trace']}")
    return state
