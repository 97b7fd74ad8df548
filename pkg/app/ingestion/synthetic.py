import numpy as np

from app.exceptions import ContractViolation
from app.ingestion.loader import RawDataset


def synth_blobs(classes: int, dims: int, per_class: int, spread: float, seed: int) -> RawDataset:
    """Gaussian blobs around seeded class centers, min-max scaled per feature.

    Samples are ordered class by class.
    """
    if classes < 2 or dims < 1 or per_class < 1 or not spread > 0:
        raise ContractViolation(
            f"invalid blob arguments: classes={classes}, dims={dims}, per_class={per_class}, spread={spread}"
        )

    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.0, 1.0, size=(classes, dims))
    labels = np.repeat(np.arange(classes), per_class)
    X = centers[labels] + rng.normal(0.0, spread, size=(labels.size, dims))

    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    X = np.clip((X - lo) / span, 0.0, 1.0)
    return RawDataset(features=X, labels=labels, classes=classes)
