"""The two CLI operations: run a configured experiment matrix, and compare
the methods of a finished result directory."""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from app.exceptions import ConfigError, ResultsError
from app.services.config_service import ExperimentConfig, load_config, serialize_config
from app.services.results_service import (
    CONFIG_FILE,
    RUNS_DIR,
    RunResult,
    group_by_method,
    load_runs,
    make_run_id,
    write_curves,
    write_frequency,
    write_heatmap,
    write_heterogeneity,
    write_participation_fairness,
    write_strategy_histogram,
    write_strategy_timeline,
    write_summary,
    write_table,
)
from app.workers.cell_tasks import run_cells

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# baseline -> delta column of the comparison table
DELTA_BASELINES = {"fedavg_full": "qubo_minus_fedavg", "random": "qubo_minus_random"}


@dataclass
class RunReport:
    out_dir: Path
    run_files: List[Path]
    summary: Path
    extra_tables: List[Path] = field(default_factory=list)


@dataclass
class CompareReport:
    out_dir: Path
    comparison: Path
    strategy_histogram: Dict[str, int]
    tables: List[Path] = field(default_factory=list)


def expected_run_ids(cfg: ExperimentConfig) -> List[str]:
    """Run ids of the configured (method, alpha, seed) matrix."""
    exp = cfg.experiment
    return [make_run_id(m, alpha, seed) for m in exp.methods for alpha in exp.alphas for seed in exp.seeds]


def with_overrides(cfg: ExperimentConfig, seed_override: Optional[int] = None) -> ExperimentConfig:
    if seed_override is None:
        return cfg
    experiment = cfg.experiment.model_copy(update={"seeds": [seed_override]})
    return cfg.model_copy(update={"experiment": experiment})


def run(
    cfg: ExperimentConfig,
    out: Optional[PathLike] = None,
    seed_override: Optional[int] = None,
    jobs: int = 1,
) -> RunReport:
    cfg = with_overrides(cfg, seed_override)
    out_dir = Path(out) if out is not None else Path(cfg.experiment.output_dir)
    runs_dir = out_dir / RUNS_DIR
    runs_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / CONFIG_FILE).write_text(serialize_config(cfg))

    cells = [(alpha, seed) for alpha in cfg.experiment.alphas for seed in cfg.experiment.seeds]
    logger.info(
        f"scenario {cfg.experiment.scenario!r}: {len(cells)} cell(s) x {len(cfg.experiment.methods)} method(s), "
        f"jobs={jobs}, out={out_dir}"
    )

    start = time.time()
    run_files = run_cells(cfg, cells, runs_dir, jobs=jobs)
    logger.info(f"all cells finished in {time.time() - start:.1f}s")

    summary, tables = summarize(out_dir, cfg)
    return RunReport(out_dir=out_dir, run_files=run_files, summary=summary, extra_tables=tables)


def summarize(out_dir: Path, cfg: ExperimentConfig) -> Tuple[Path, List[Path]]:
    """Derived tables, computed only from the run files on disk."""
    n = cfg.experiment.n_clients
    runs = load_runs(out_dir, n, expected_run_ids(cfg))

    summary = write_summary(out_dir, runs, n)
    tables = [write_curves(out_dir, runs), write_heterogeneity(out_dir, runs)]
    for method, group in group_by_method(runs).items():
        tables.append(write_heatmap(out_dir, method, group, n))
        tables.append(write_frequency(out_dir, method, group, n))
    tables.append(write_strategy_timeline(out_dir, runs))
    return summary, tables


# =========================================
# compare
# =========================================
def _result_config(result_dir: Path) -> ExperimentConfig:
    path = result_dir / CONFIG_FILE
    if not path.exists():
        raise ResultsError(f"{result_dir} has no {CONFIG_FILE}")
    try:
        return load_config(path)
    except ConfigError as e:
        raise ResultsError(f"{path}: {e}") from e


def _check_matrix(runs: Sequence[RunResult]) -> Dict[str, Dict[Tuple[float, int], RunResult]]:
    by_method: Dict[str, Dict[Tuple[float, int], RunResult]] = {}
    for run in runs:
        by_method.setdefault(run.method, {})[(run.alpha, run.seed)] = run

    if len(by_method) < 2:
        raise ResultsError(f"compare needs at least two methods, found {sorted(by_method) or 'none'}")

    cells = sorted({cell for grid in by_method.values() for cell in grid})
    missing = [
        f"{method}@alpha={alpha!r},seed={seed}"
        for method, grid in sorted(by_method.items())
        for alpha, seed in cells
        if (alpha, seed) not in grid
    ]
    if missing:
        raise ResultsError("run matrices do not match across methods", missing=missing)

    for alpha, seed in cells:
        lengths = {m: len(grid[(alpha, seed)].records) for m, grid in by_method.items()}
        if len(set(lengths.values())) != 1:
            raise ResultsError(f"alpha={alpha!r} seed={seed}: round counts differ {lengths}")
    return by_method


def compare(result_dir: PathLike, out: Optional[PathLike] = None) -> CompareReport:
    result_dir = Path(result_dir)
    out_dir = Path(out) if out is not None else result_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    cfg = _result_config(result_dir)
    n = cfg.experiment.n_clients
    runs = load_runs(result_dir, n, expected_run_ids(cfg))
    by_method = _check_matrix(runs)

    methods = sorted(by_method)
    deltas = [(base, col) for base, col in DELTA_BASELINES.items() if "qubo" in by_method and base in by_method]
    header = (
        ["alpha", "seed", "round"]
        + [f"accuracy_{m}" for m in methods]
        + [f"loss_{m}" for m in methods]
        + [col for _, col in deltas]
    )

    rows = []
    for alpha, seed in sorted(next(iter(by_method.values()))):
        cell = {m: by_method[m][(alpha, seed)].records for m in methods}
        for t in range(len(cell[methods[0]])):
            acc = {m: cell[m][t].accuracy for m in methods}
            rows.append(
                [alpha, seed, t]
                + [acc[m] for m in methods]
                + [cell[m][t].loss for m in methods]
                + [acc["qubo"] - acc[base] for base, _ in deltas]
            )
    comparison = write_table(out_dir / "comparison.csv", header, rows)

    histogram = write_strategy_histogram(out_dir / "strategy_histogram.csv", runs)
    fairness = write_participation_fairness(out_dir / "participation_fairness.csv", runs, n)

    logger.info(f"compared {', '.join(methods)} over {len(rows)} aligned rounds -> {comparison}")
    return CompareReport(
        out_dir=out_dir,
        comparison=comparison,
        strategy_histogram=histogram,
        tables=[out_dir / "strategy_histogram.csv", fairness],
    )
