from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, NonNegativeInt, PositiveFloat, PositiveInt

from app.exceptions import ContractViolation
from app.federated.model import GlobalModel, loss_and_grad
from app.selection.scoring import ClientUpdate


@dataclass(frozen=True)
class ClientDataset:
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features)
        if not np.issubdtype(X.dtype, np.floating):
            X = X.astype(np.float64)
        y = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ContractViolation(f"features {X.shape} and labels {y.shape} disagree")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def size(self) -> int:
        return int(self.labels.shape[0])

    def subset(self, indices: np.ndarray) -> "ClientDataset":
        return ClientDataset(self.features[indices], self.labels[indices])


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    local_iterations: NonNegativeInt = 20
    batch_size: PositiveInt = 32
    client_lr: PositiveFloat = 0.1
    server_lr_fedavg: PositiveFloat = 0.065
    server_lr_qubo: PositiveFloat = 0.082
    rounds: NonNegativeInt = 20
    hidden_units: PositiveInt = 64
    seed: int = 0


def local_train(
    global_model: GlobalModel,
    data: ClientDataset,
    cfg: TrainConfig,
    client_id: int = 0,
    round_index: int = 0,
) -> ClientUpdate:
    """Mini-batch SGD from the broadcast parameters; returns w_new - w_global.

    One seeded shuffle per call, batches taken cyclically from it.
    """
    if data.size == 0:
        raise ContractViolation(f"client {client_id} has no training data")

    rng = np.random.default_rng([cfg.seed, round_index, client_id])
    order = rng.permutation(data.size)
    bs = min(cfg.batch_size, data.size)

    w = global_model.params.copy()
    for step in range(cfg.local_iterations):
        batch = order[(step * bs + np.arange(bs)) % data.size]
        _, grad = loss_and_grad(global_model.arch, w, data.features[batch], data.labels[batch])
        w -= cfg.client_lr * grad

    return ClientUpdate(client_id=client_id, delta=w - global_model.params, num_samples=data.size)
