import logging
import time
from typing import TYPE_CHECKING, Callable, Dict, FrozenSet, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from app.exceptions import InfeasibleRoundError
from app.qubo.matrix import energy
from app.qubo.solver import AnnealParams, solve_sa_batch
from app.selection.builder import (
    SelectionParams,
    SelectionState,
    apply_max_selection_exclusion,
    build_qubo,
)
from app.selection.scoring import (
    ClientUpdate,
    composite_score,
    magnitude_boosted_relevance,
    relevance_scores,
    similarity_matrix,
    update_variance,
)
from app.selection.strategies import StrategyConfig

if TYPE_CHECKING:
    from app.federated.model import GlobalModel

logger = logging.getLogger(__name__)

# accuracy of the trial model built from (global, selected updates)
EvalFn = Callable[["GlobalModel", Sequence[ClientUpdate]], float]


class StrategyScore(BaseModel):
    score: float
    accuracy: float
    variance: float
    n_selected: int


class SelectionOutcome(BaseModel):
    selected: FrozenSet[int]
    winning_strategy: str
    per_strategy_scores: Dict[str, StrategyScore]
    trace: List[dict] = []


def _top_k_fallback(r_norm: np.ndarray, k: int) -> np.ndarray:
    # stable sort keeps the lower index first on equal relevance
    order = np.argsort(-r_norm, kind="stable")
    return np.sort(order[: min(k, len(order))])


def select_clients(
    global_model: "GlobalModel",
    updates: Sequence[ClientUpdate],
    params: SelectionParams,
    state: SelectionState,
    eval_fn: EvalFn,
    bank: Sequence[StrategyConfig],
    anneal: AnnealParams,
) -> SelectionOutcome:
    """Run every strategy's QUBO, score the selections, keep the best.

    Exclusion removes capped clients from the variable space. An all-zero
    solver answer falls back to the top-k candidates by relevance. The
    winner's clients are counted into `state` once, after scoring.
    """
    start = time.time()
    if not updates:
        raise InfeasibleRoundError("no client updates to select from")

    excluded = apply_max_selection_exclusion(state, params.max_selections)
    pool = [i for i, u in enumerate(updates) if u.client_id not in excluded]
    if not pool:
        raise InfeasibleRoundError(
            f"round {state.round_index}: every client has reached max_selections={params.max_selections}"
        )

    # statistics over the full round, restricted to the candidate pool
    r_all = relevance_scores(updates, params.epsilon)
    S_all = similarity_matrix(updates, params.epsilon)
    idx = np.array(pool)
    r_norm = r_all[idx]
    S = S_all[np.ix_(idx, idx)]
    counts = state.counts[[updates[i].client_id for i in pool]]

    r_mag = None
    if any(s.magnitude_boost for s in bank):
        r_mag = magnitude_boosted_relevance(r_all, updates, params.gamma, params.epsilon)[idx]

    qubos = [
        build_qubo(r_mag if strat.magnitude_boost else r_norm, S, strat, params, counts)
        for strat in bank
    ]
    solutions = solve_sa_batch(qubos, anneal)

    evaluated: Dict[FrozenSet[int], Tuple[float, float]] = {}
    per_strategy: Dict[str, StrategyScore] = {}
    trace: List[dict] = []
    best_score, best_name, best_set = -np.inf, None, frozenset()

    for strat, q, x in zip(bank, qubos, solutions):
        chosen = np.flatnonzero(x)
        fallback = chosen.size == 0
        if fallback:
            chosen = _top_k_fallback(r_norm, params.k)

        members = [updates[pool[j]] for j in chosen]
        selected = frozenset(u.client_id for u in members)
        if not selected:
            continue

        if selected not in evaluated:
            accuracy = float(eval_fn(global_model, members))
            evaluated[selected] = (accuracy, update_variance(members))
        accuracy, variance = evaluated[selected]

        score = composite_score(accuracy, strat.lambda_r_s, variance, params.score_weights)
        per_strategy[strat.name] = StrategyScore(
            score=score, accuracy=accuracy, variance=variance, n_selected=len(selected)
        )
        trace.append({
            "strategy": strat.name,
            "energy": energy(q, x),
            "fallback": fallback,
            "n_selected": len(selected),
            "score": round(score, 6),
        })

        if score > best_score:
            best_score, best_name, best_set = score, strat.name, selected

    if best_name is None:
        raise InfeasibleRoundError(f"round {state.round_index}: every strategy produced an empty selection")

    state.record(sorted(best_set))

    duration = int((time.time() - start) * 1000)
    logger.debug(
        f"round {state.round_index - 1}: {best_name} wins with {len(best_set)} clients "
        f"(score={best_score:.4f}, pool={len(pool)}, trials={len(evaluated)}, {duration}ms)"
    )

    return SelectionOutcome(
        selected=best_set,
        winning_strategy=best_name,
        per_strategy_scores=per_strategy,
        trace=trace,
    )
