"""Per-round client statistics consumed by the QUBO builder and the
strategy scorer."""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from app.exceptions import ContractViolation

EPSILON = 1e-8


@dataclass(frozen=True)
class ClientUpdate:
    client_id: int
    delta: np.ndarray
    num_samples: int

    def __post_init__(self):
        d = np.array(self.delta, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(d)):
            raise ContractViolation(f"client {self.client_id}: update has non-finite entries")
        if self.num_samples < 1:
            raise ContractViolation(f"client {self.client_id}: num_samples must be positive")
        d.setflags(write=False)
        object.__setattr__(self, "delta", d)


def stack_deltas(updates: Sequence[ClientUpdate]) -> np.ndarray:
    if not updates:
        raise ContractViolation("at least one client update is required")
    lengths = {u.delta.shape[0] for u in updates}
    if len(lengths) != 1:
        raise ContractViolation(f"client updates have mismatched lengths: {sorted(lengths)}")
    return np.stack([u.delta for u in updates])


def relevance_scores(updates: Sequence[ClientUpdate], epsilon: float = EPSILON) -> np.ndarray:
    """Consensus relevance, min-max normalized to [0, 1)."""
    D = stack_deltas(updates)
    mean = D.mean(axis=0)
    dist = np.linalg.norm(D - mean, axis=1)
    r = 1.0 - dist / (dist.max() + epsilon)
    return (r - r.min()) / (r.max() - r.min() + epsilon)


def similarity_matrix(updates: Sequence[ClientUpdate], epsilon: float = EPSILON) -> np.ndarray:
    D = stack_deltas(updates)
    norms = np.linalg.norm(D, axis=1)
    live = norms >= epsilon
    unit = np.zeros_like(D)
    unit[live] = D[live] / norms[live, None]

    S = np.clip(unit @ unit.T, -1.0, 1.0)
    # exact symmetry for the QUBO builder
    S = 0.5 * (S + S.T)
    np.fill_diagonal(S, 0.0)
    return S


def magnitude_boosted_relevance(
    r_norm: np.ndarray,
    updates: Sequence[ClientUpdate],
    gamma: float,
    epsilon: float = EPSILON,
) -> np.ndarray:
    r = np.asarray(r_norm, dtype=np.float64)
    if r.shape[0] != len(updates):
        raise ContractViolation("relevance vector and update list differ in length")
    norms = np.linalg.norm(stack_deltas(updates), axis=1)
    return (1.0 - gamma) * r + gamma * norms / (norms.max() + epsilon)


def update_variance(selected_updates: Sequence[ClientUpdate]) -> float:
    """Mean over parameter dimensions of the population std across clients."""
    if not selected_updates:
        raise ContractViolation("variance of an empty selection is undefined")
    D = stack_deltas(selected_updates)
    return float(D.std(axis=0).mean())


def composite_score(
    accuracy: float,
    lambda_r_s: float,
    variance: float,
    weights: Tuple[float, float, float],
) -> float:
    eta1, eta2, eta3 = weights
    return eta1 * accuracy + eta2 * lambda_r_s - eta3 * variance
