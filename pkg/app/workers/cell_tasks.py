"""Run matrix execution.

A cell is one (alpha, seed) pair. It builds the federated split once and
runs every configured method on it in fedavg_full, qubo, random order, so
random can replay the qubo selection sizes. Each method writes its own file.
"""

import logging
import multiprocessing as mp
from functools import lru_cache
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from app.federated.datasets import FederatedDatasets, federate
from app.federated.partition import stratified_split
from app.ingestion.loader import RawDataset, load_idx
from app.ingestion.synthetic import synth_blobs
from app.orchestrator.runner import run_experiment
from app.services.config_service import DataSection, ExperimentConfig
from app.services.results_service import write_run

logger = logging.getLogger(__name__)

Cell = Tuple[float, int]


@lru_cache(maxsize=2)
def _load_idx_pair(train_images: str, train_labels: str, test_images: str, test_labels: str):
    train = load_idx(train_images, train_labels)
    test = load_idx(test_images, test_labels, classes=train.classes)
    return train, test


def load_datasets(data: DataSection) -> Tuple[RawDataset, RawDataset]:
    """(train, test) for the configured source."""
    if data.source == "synthetic":
        full = synth_blobs(data.classes, data.dims, data.per_class, data.spread, data.seed)
        test_idx, train_idx = stratified_split(full.labels, data.test_fraction, data.seed)
        train, test = full.subset(train_idx), full.subset(test_idx)
    else:
        train, test = _load_idx_pair(data.train_images, data.train_labels, data.test_images, data.test_labels)

    cap = data.max_train_samples
    if cap is not None and cap < train.size:
        kept, _ = stratified_split(train.labels, cap / train.size, data.seed)
        train = train.subset(kept)
        logger.info(f"training set capped at {train.size} samples")
    return train, test


def build_cell_datasets(cfg: ExperimentConfig, alpha: float, seed: int) -> FederatedDatasets:
    train, test = load_datasets(cfg.data)
    return federate(
        train,
        test,
        cfg.experiment.n_clients,
        alpha,
        seed,
        validation_fraction=cfg.data.validation_fraction,
    )


def run_cell(cfg: ExperimentConfig, alpha: float, seed: int, runs_dir: Path) -> List[Path]:
    logger.info(f"cell alpha={alpha} seed={seed}: starting {', '.join(cfg.experiment.methods)}")
    try:
        datasets = build_cell_datasets(cfg, alpha, seed)
        train_cfg = cfg.train_config(seed)
        params = cfg.selection_params()
        bank = cfg.bank()
        anneal = cfg.anneal_params()

        written: List[Path] = []
        reference_sizes: Optional[List[int]] = None
        for method in cfg.experiment.methods:
            records = run_experiment(
                train_cfg,
                method,
                params,
                datasets,
                seed,
                bank=bank,
                anneal=anneal,
                reference_sizes=reference_sizes if method == "random" else None,
            )
            if method == "qubo":
                reference_sizes = [len(r.selected) for r in records]
            written.append(write_run(runs_dir, method, alpha, seed, records))
        return written

    except Exception as e:
        logger.exception(f"cell alpha={alpha} seed={seed} failed: {e}")
        raise


def run_cells(cfg: ExperimentConfig, cells: Sequence[Cell], runs_dir: Path, jobs: int = 1) -> List[Path]:
    """Run every cell, in-process or on a pool of `jobs` worker processes."""
    args = [(cfg, alpha, seed, Path(runs_dir)) for alpha, seed in cells]
    if jobs <= 1 or len(args) <= 1:
        results = [run_cell(*a) for a in args]
    else:
        with mp.Pool(processes=min(jobs, len(args))) as pool:
            results = pool.starmap(run_cell, args)
    return [path for paths in results for path in paths]
