from app.federated.client import ClientDataset, TrainConfig, local_train
from app.federated.model import GlobalModel, ModelArch, init_model
from app.federated.partition import dirichlet_partition, stratified_split
from app.federated.server import evaluate, fedavg_aggregate

__all__ = [
    "ClientDataset",
    "GlobalModel",
    "ModelArch",
    "TrainConfig",
    "dirichlet_partition",
    "evaluate",
    "fedavg_aggregate",
    "init_model",
    "local_train",
    "stratified_split",
]
