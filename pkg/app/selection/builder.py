import logging
from dataclasses import dataclass
from typing import Optional, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator

from app.exceptions import ContractViolation
from app.qubo.matrix import QuboMatrix
from app.selection.strategies import StrategyConfig

logger = logging.getLogger(__name__)

# pair weight used by anti-clustering strategies once S_ij > tau
ANTI_CLUSTER_WEIGHT = 0.3


class SelectionParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    beta_r: float = 3.0
    k: PositiveInt = 10
    tau: float = Field(default=0.98, gt=0.0, le=1.0)
    gamma: float = Field(default=0.3, gt=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)
    max_selections: PositiveInt = 10
    fairness_mode: bool = False
    fairness_weight: float = Field(default=1.0, ge=0.0)
    score_weights: Tuple[float, float, float] = (1.0, 0.01, 0.001)

    @field_validator("score_weights", mode="before")
    @classmethod
    def _coerce_weights(cls, v):
        return tuple(float(w) for w in v)


@dataclass
class SelectionState:
    """Cumulative selection counts, carried across rounds. Single writer."""

    counts: np.ndarray
    round_index: int = 0

    @classmethod
    def fresh(cls, n_clients: int) -> "SelectionState":
        return cls(counts=np.zeros(n_clients, dtype=np.int64))

    def record(self, selected) -> None:
        for cid in selected:
            self.counts[cid] += 1
        self.round_index += 1


def apply_max_selection_exclusion(state: SelectionState, max_selections: int) -> Set[int]:
    excluded = {int(i) for i in np.flatnonzero(state.counts >= max_selections)}
    if excluded:
        logger.debug(f"round {state.round_index}: {len(excluded)} client(s) capped at {max_selections}")
    return excluded


def build_qubo(
    r: np.ndarray,
    S: np.ndarray,
    strat: StrategyConfig,
    params: SelectionParams,
    fairness_counts: Optional[np.ndarray] = None,
) -> QuboMatrix:
    """Selection QUBO over the (already filtered) candidate pool.

    Q_ii = -beta_r r_i + lambda_c (1 - 2k)  [+ fairness penalty]
    pair(i, j) = 2 lambda_c + lambda_eff S_ij, split evenly over (i, j) and (j, i)
    The lambda_c k^2 constant is dropped.
    """
    r = np.asarray(r, dtype=np.float64).reshape(-1)
    S = np.asarray(S, dtype=np.float64)
    n = r.shape[0]
    if S.shape != (n, n):
        raise ContractViolation(f"similarity shape {S.shape} does not match {n} relevance scores")

    diag = -params.beta_r * r + strat.lambda_c * (1 - 2 * params.k)
    if params.fairness_mode and fairness_counts is not None:
        c = np.asarray(fairness_counts, dtype=np.float64).reshape(-1)
        if c.shape[0] != n:
            raise ContractViolation("fairness counts do not match the candidate pool")
        diag = diag + params.fairness_weight * (c / params.max_selections) * params.beta_r

    if strat.anti_clustering:
        lam = np.where(S > params.tau, ANTI_CLUSTER_WEIGHT, strat.lambda_r_s)
    else:
        lam = np.full_like(S, strat.lambda_r_s)

    coeffs = 0.5 * (2.0 * strat.lambda_c + lam * S)
    np.fill_diagonal(coeffs, diag)
    return QuboMatrix(coeffs)
