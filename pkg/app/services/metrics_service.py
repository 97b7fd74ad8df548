"""Privacy-exposure proxies and participation statistics.

Per-round privacy is the share of clients whose update stays out of the
round's aggregate. Cumulative privacy is reported both as the never-selected
fraction and as one minus the mean participation rate.
"""

from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from app.exceptions import ContractViolation
from app.selection.scoring import ClientUpdate, update_variance

NO_STRATEGY = "n/a"


class RoundRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    round: int
    n_clients: int
    selected: Tuple[int, ...]
    winning_strategy: str = NO_STRATEGY
    accuracy: float
    loss: float
    per_round_privacy: float
    gradient_variance: float

    @model_validator(mode="after")
    def _check_privacy(self):
        if self.per_round_privacy != per_round_privacy(len(self.selected), self.n_clients):
            raise ValueError("per_round_privacy must equal 1 - |selected| / n")
        return self


class ParticipationSummary(BaseModel):
    counts: List[int]
    rounds: int
    never_selected_fraction: float
    mean_participation_rate: float
    cumulative_privacy: float


def per_round_privacy(selected_size: int, n: int) -> float:
    if n < 1 or not 0 <= selected_size <= n:
        raise ContractViolation(f"selected size {selected_size} outside [0, {n}]")
    return 1.0 - selected_size / n


def selection_counts(history: Iterable[RoundRecord], n: int) -> np.ndarray:
    counts = np.zeros(n, dtype=np.int64)
    for rec in history:
        if rec.n_clients != n:
            raise ContractViolation(f"round {rec.round} was recorded with n={rec.n_clients}, expected {n}")
        for cid in rec.selected:
            if not 0 <= cid < n:
                raise ContractViolation(f"round {rec.round}: client id {cid} outside [0, {n})")
            counts[cid] += 1
    return counts


def participation_summary(history: Sequence[RoundRecord], n: int) -> ParticipationSummary:
    if not history:
        raise ContractViolation("participation summary needs at least one round")

    counts = selection_counts(history, n)
    rounds = len(history)
    rate = int(counts.sum()) / (n * rounds)
    return ParticipationSummary(
        counts=counts.tolist(),
        rounds=rounds,
        never_selected_fraction=int(np.sum(counts == 0)) / n,
        mean_participation_rate=rate,
        cumulative_privacy=1.0 - rate,
    )


def cumulative_privacy_from_sizes(history: Sequence[RoundRecord], n: int) -> float:
    total = sum(len(rec.selected) for rec in history)
    return 1.0 - total / (n * len(history))


def gradient_variance(updates: Sequence[ClientUpdate], selected: Iterable[int]) -> float:
    wanted = set(selected)
    if not wanted:
        raise ContractViolation("gradient variance of an empty selection is undefined")
    return update_variance([u for u in updates if u.client_id in wanted])


# =========================================
# Exportable analysis series
# =========================================
@dataclass(frozen=True)
class HeatmapTable:
    alphas: List[float]
    counts: np.ndarray  # (n_clients, len(alphas))

    def rows(self) -> List[List]:
        return [[cid] + [int(v) for v in row] for cid, row in enumerate(self.counts)]


def export_heatmap(histories: Mapping[float, Sequence[RoundRecord]], n: int) -> HeatmapTable:
    """Client x alpha matrix of selection counts."""
    alphas = sorted(histories)
    counts = np.zeros((n, len(alphas)), dtype=np.int64)
    for col, alpha in enumerate(alphas):
        counts[:, col] = selection_counts(histories[alpha], n)
    return HeatmapTable(alphas=alphas, counts=counts)


def selection_frequency(counts: Sequence[int]) -> Dict[int, int]:
    """m -> number of clients selected in exactly m rounds."""
    tally = Counter(int(c) for c in counts)
    return {m: tally.get(m, 0) for m in range(max(tally, default=0) + 1)}


def participation_quantiles(counts: Sequence[int], rounds: int) -> Tuple[float, float, float, float, float]:
    if rounds < 1 or len(counts) == 0:
        raise ContractViolation("participation quantiles need rounds and clients")
    rates = np.asarray(counts, dtype=np.float64) / rounds
    q = np.quantile(rates, [0.0, 0.25, 0.5, 0.75, 1.0])
    return tuple(float(v) for v in q)


def strategy_timeline(history: Sequence[RoundRecord]) -> Dict[int, str]:
    return {rec.round: rec.winning_strategy for rec in history}


def strategy_histogram(histories: Iterable[Sequence[RoundRecord]]) -> Dict[str, int]:
    tally: Counter = Counter()
    for history in histories:
        tally.update(rec.winning_strategy for rec in history if rec.winning_strategy != NO_STRATEGY)
    return dict(sorted(tally.items()))


def max_accuracy_by_alpha(histories: Mapping[float, Sequence[Sequence[RoundRecord]]]) -> Dict[float, float]:
    """Best accuracy reached per alpha, taken over every run at that alpha."""
    return {
        alpha: max((rec.accuracy for run in runs for rec in run), default=float("nan"))
        for alpha, runs in sorted(histories.items())
    }


def mean_over_runs(series: Sequence[Sequence[float]]) -> List[float]:
    """Unweighted per-round mean across runs of equal length."""
    if not series:
        return []
    lengths = {len(s) for s in series}
    if len(lengths) != 1:
        raise ContractViolation(f"runs differ in length: {sorted(lengths)}")
    return np.asarray(series, dtype=np.float64).mean(axis=0).tolist()
