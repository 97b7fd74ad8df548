import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from app.federated.client import ClientDataset
from app.federated.partition import dirichlet_partition, stratified_split
from app.ingestion.loader import RawDataset

logger = logging.getLogger(__name__)

VALIDATION_FRACTION = 0.10


@dataclass(frozen=True)
class FederatedDatasets:
    clients: List[ClientDataset]
    validation: ClientDataset
    test: ClientDataset
    classes: int

    @property
    def n_clients(self) -> int:
        return len(self.clients)

    @property
    def input_dim(self) -> int:
        return int(self.test.features.shape[1])


def _to_client(raw: RawDataset) -> ClientDataset:
    return ClientDataset(raw.features, raw.labels)


def federate(
    train: RawDataset,
    test: RawDataset,
    n_clients: int,
    alpha: float,
    seed: int,
    validation_fraction: float = VALIDATION_FRACTION,
) -> FederatedDatasets:
    """Hold a stratified validation split at the server and Dirichlet-partition
    the rest of the training set over the clients."""
    held, rest = stratified_split(train.labels, validation_fraction, seed)
    pool = train.subset(rest)
    shards = dirichlet_partition(pool.labels, n_clients, alpha, seed)

    clients = [_to_client(pool.subset(idx)) for idx in shards]
    sizes = np.array([c.size for c in clients])
    logger.info(
        f"federated split alpha={alpha} seed={seed}: {n_clients} clients, "
        f"sizes min={sizes.min()} median={int(np.median(sizes))} max={sizes.max()}, "
        f"validation={len(held)}, test={test.size}"
    )
    return FederatedDatasets(
        clients=clients,
        validation=_to_client(train.subset(held)),
        test=_to_client(test),
        classes=train.classes,
    )
