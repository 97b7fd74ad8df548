from typing import Iterable, Sequence, Tuple

import numpy as np

from app.exceptions import ContractViolation
from app.federated.client import ClientDataset
from app.federated.model import GlobalModel, log_softmax, logits
from app.selection.scoring import ClientUpdate


def fedavg_aggregate(
    global_model: GlobalModel,
    updates: Sequence[ClientUpdate],
    selected: Iterable[int],
    server_lr: float,
) -> GlobalModel:
    """w + server_lr * sum_i (|D_i| / |D|) delta_i over the selected clients.

    Sums run in ascending client id, so the list order does not matter.
    """
    chosen = sorted(set(selected))
    if not chosen:
        raise ContractViolation("FedAvg needs at least one selected client")

    by_id = {u.client_id: u for u in updates}
    unknown = [cid for cid in chosen if cid not in by_id]
    if unknown:
        raise ContractViolation(f"selected clients without an update: {unknown}")

    total = float(sum(by_id[cid].num_samples for cid in chosen))
    step = np.zeros_like(global_model.params)
    for cid in chosen:
        u = by_id[cid]
        step += (u.num_samples / total) * u.delta

    return global_model.with_params(global_model.params + server_lr * step)


def evaluate(model: GlobalModel, test: ClientDataset) -> Tuple[float, float]:
    """(accuracy, mean cross-entropy). argmax ties go to the lowest class."""
    if test.size == 0:
        raise ContractViolation("cannot evaluate on an empty dataset")

    z = logits(model.arch, model.params, test.features)
    lp = log_softmax(z)
    accuracy = float(np.mean(np.argmax(z, axis=1) == test.labels))
    loss = float(-lp[np.arange(test.size), test.labels].mean())
    return accuracy, loss
