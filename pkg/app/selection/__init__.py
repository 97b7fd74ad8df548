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
from app.selection.selector import SelectionOutcome, StrategyScore, select_clients
from app.selection.strategies import StrategyConfig, strategy_bank

__all__ = [
    "ClientUpdate",
    "SelectionOutcome",
    "SelectionParams",
    "SelectionState",
    "StrategyConfig",
    "StrategyScore",
    "apply_max_selection_exclusion",
    "build_qubo",
    "composite_score",
    "magnitude_boosted_relevance",
    "relevance_scores",
    "select_clients",
    "similarity_matrix",
    "strategy_bank",
    "update_variance",
]
