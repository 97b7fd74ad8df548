import logging
from typing import List, Tuple

import numpy as np

from app.exceptions import ContractViolation

logger = logging.getLogger(__name__)


def _largest_remainder(proportions: np.ndarray, total: int) -> np.ndarray:
    raw = proportions * total
    splits = np.floor(raw).astype(np.int64)
    remainder = total - int(splits.sum())
    if remainder > 0:
        order = np.argsort(-(raw - splits), kind="stable")
        splits[order[:remainder]] += 1
    return splits


def dirichlet_partition(labels: np.ndarray, n_clients: int, alpha: float, seed: int) -> List[np.ndarray]:
    """Split sample indices across clients with per-class Dirichlet(alpha) shares.

    Every index lands in exactly one client. Clients the draw leaves empty
    take one sample from the currently largest client.
    """
    labels = np.asarray(labels).reshape(-1)
    if n_clients < 1:
        raise ContractViolation("n_clients must be at least 1")
    if alpha <= 0:
        raise ContractViolation("alpha must be positive")
    if len(labels) < n_clients:
        raise ContractViolation(f"{len(labels)} samples cannot cover {n_clients} clients")

    rng = np.random.default_rng(seed)
    buckets: List[list] = [[] for _ in range(n_clients)]

    for c in np.unique(labels):
        idx_c = np.flatnonzero(labels == c)
        rng.shuffle(idx_c)
        proportions = rng.dirichlet(np.full(n_clients, float(alpha)))
        splits = _largest_remainder(proportions, len(idx_c))

        start = 0
        for i, take in enumerate(splits):
            if take:
                buckets[i].extend(idx_c[start:start + take].tolist())
                start += take

    repaired = 0
    while True:
        sizes = np.array([len(b) for b in buckets])
        empty = np.flatnonzero(sizes == 0)
        if empty.size == 0:
            break
        donor = int(np.argmax(sizes))
        buckets[donor].sort()
        buckets[int(empty[0])].append(buckets[donor].pop())
        repaired += 1

    if repaired:
        logger.debug(f"dirichlet(alpha={alpha}): repaired {repaired} empty client(s)")

    return [np.array(sorted(b), dtype=np.int64) for b in buckets]


def stratified_split(labels: np.ndarray, fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """(held-out, remaining) index arrays, held-out taking `fraction` of each class."""
    if not 0.0 <= fraction < 1.0:
        raise ContractViolation("split fraction must be in [0, 1)")
    labels = np.asarray(labels).reshape(-1)
    rng = np.random.default_rng([seed, 104729])

    held, rest = [], []
    for c in np.unique(labels):
        idx_c = np.flatnonzero(labels == c)
        rng.shuffle(idx_c)
        take = int(round(fraction * len(idx_c)))
        held.append(idx_c[:take])
        rest.append(idx_c[take:])

    return np.sort(np.concatenate(held)), np.sort(np.concatenate(rest))


def label_entropy(labels: np.ndarray, classes: int) -> float:
    """Shannon entropy (nats) of a label histogram."""
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=classes).astype(np.float64)
    if counts.sum() == 0:
        return 0.0
    p = counts / counts.sum()
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())
