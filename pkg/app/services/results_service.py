"""Result tables on disk: one CSV per (method, alpha, seed) run plus the
derived summary, curve, heatmap, frequency and timeline tables.

Floats are written with repr() so a rerun of the same config reproduces
every file byte for byte and reading a file back restores the exact values.
"""

import csv
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from app.exceptions import ResultsError
from app.services.metrics_service import (
    RoundRecord,
    export_heatmap,
    max_accuracy_by_alpha,
    mean_over_runs,
    participation_quantiles,
    participation_summary,
    selection_frequency,
    strategy_histogram,
    strategy_timeline,
)

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "run_id",
    "method",
    "alpha",
    "seed",
    "round",
    "n_selected",
    "per_round_privacy",
    "accuracy",
    "loss",
    "gradient_variance",
    "winning_strategy",
    "selected_ids",
]

SUMMARY_COLUMNS = [
    "run_id",
    "method",
    "alpha",
    "seed",
    "rounds",
    "final_accuracy",
    "max_accuracy",
    "final_loss",
    "mean_n_selected",
    "mean_per_round_privacy",
    "cumulative_privacy",
    "never_selected_fraction",
    "mean_gradient_variance",
    "strategy_wins",
]

RUNS_DIR = "runs"
CONFIG_FILE = "config.ini"

_RUN_ID_RE = re.compile(r"^(fedavg_full|qubo|random)_a(.+)_s(-?\d+)$")


@dataclass(frozen=True)
class RunResult:
    run_id: str
    method: str
    alpha: float
    seed: int
    records: List[RoundRecord]


def make_run_id(method: str, alpha: float, seed: int) -> str:
    return f"{method}_a{alpha!r}_s{seed}"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_fmt(v) for v in row] for row in rows)
    return path


def read_table(path: Path) -> List[Dict[str, str]]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


# =========================================
# Per-run files
# =========================================
def write_run(runs_dir: Path, method: str, alpha: float, seed: int, records: Sequence[RoundRecord]) -> Path:
    run_id = make_run_id(method, alpha, seed)
    rows = [
        [
            run_id,
            method,
            float(alpha),
            seed,
            rec.round,
            len(rec.selected),
            rec.per_round_privacy,
            rec.accuracy,
            rec.loss,
            rec.gradient_variance,
            rec.winning_strategy,
            ";".join(str(cid) for cid in rec.selected),
        ]
        for rec in records
    ]
    path = write_table(Path(runs_dir) / f"{run_id}.csv", RESULT_COLUMNS, rows)
    logger.info(f"wrote {len(rows)} rounds to {path}")
    return path


def _parse_row(row: Dict[str, str], run_id: str, n_clients: int) -> RoundRecord:
    if row["run_id"] != run_id:
        raise ResultsError(f"row belongs to run {row['run_id']!r}")
    ids = tuple(int(c) for c in row["selected_ids"].split(";") if c)
    if len(ids) != int(row["n_selected"]):
        raise ResultsError(f"round {row['round']} lists {len(ids)} ids, n_selected={row['n_selected']}")
    outside = [cid for cid in ids if not 0 <= cid < n_clients]
    if outside:
        raise ResultsError(f"round {row['round']} selects ids {outside} outside [0, {n_clients})")
    return RoundRecord(
        round=int(row["round"]),
        n_clients=n_clients,
        selected=ids,
        winning_strategy=row["winning_strategy"],
        accuracy=float(row["accuracy"]),
        loss=float(row["loss"]),
        per_round_privacy=float(row["per_round_privacy"]),
        gradient_variance=float(row["gradient_variance"]),
    )


def read_run(path: Path, n_clients: int) -> RunResult:
    """Parse one run file; anything that does not fit `n_clients` is a ResultsError."""
    path = Path(path)
    m = _RUN_ID_RE.match(path.stem)
    if m is None:
        raise ResultsError(f"{path.name}: not a run file name")
    method, alpha, seed = m.group(1), float(m.group(2)), int(m.group(3))

    records = []
    for line, row in enumerate(read_table(path), start=2):
        try:
            records.append(_parse_row(row, path.stem, n_clients))
        except ResultsError as e:
            raise ResultsError(f"{path.name}:{line}: {e}") from e
        except (KeyError, TypeError, ValueError) as e:
            # pydantic's ValidationError is a ValueError
            reason = str(e).splitlines()[0]
            raise ResultsError(f"{path.name}:{line}: malformed row for n_clients={n_clients} ({reason})") from e
    return RunResult(run_id=path.stem, method=method, alpha=alpha, seed=seed, records=records)


def load_runs(result_dir: Path, n_clients: int, run_ids: Optional[Iterable[str]] = None) -> List[RunResult]:
    """Read the run files under `<result_dir>/runs`, restricted to `run_ids` when given."""
    runs_dir = Path(result_dir) / RUNS_DIR
    files = sorted(runs_dir.glob("*.csv")) if runs_dir.is_dir() else []
    if run_ids is not None:
        wanted = set(run_ids)
        stray = [p.name for p in files if p.stem not in wanted]
        if stray:
            logger.warning(f"ignoring {len(stray)} run file(s) outside the configured matrix: {', '.join(stray)}")
        files = [p for p in files if p.stem in wanted]
    if not files:
        raise ResultsError(f"no run files under {runs_dir}")
    runs = [read_run(p, n_clients) for p in files]
    return sorted(runs, key=_run_order)


def _run_order(run: RunResult) -> Tuple[str, float, int]:
    return run.method, run.alpha, run.seed


def group_by_method(runs: Sequence[RunResult]) -> Dict[str, List[RunResult]]:
    grouped: Dict[str, List[RunResult]] = {}
    for run in runs:
        grouped.setdefault(run.method, []).append(run)
    return grouped


# =========================================
# Derived tables
# =========================================
def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def summary_row(run: RunResult, n_clients: int) -> List:
    recs = run.records
    head = [run.run_id, run.method, run.alpha, run.seed, len(recs)]
    if not recs:
        return head + [""] * (len(SUMMARY_COLUMNS) - len(head))

    part = participation_summary(recs, n_clients)
    wins = strategy_histogram([recs])
    return head + [
        recs[-1].accuracy,
        max(r.accuracy for r in recs),
        recs[-1].loss,
        _mean([float(len(r.selected)) for r in recs]),
        _mean([r.per_round_privacy for r in recs]),
        part.cumulative_privacy,
        part.never_selected_fraction,
        _mean([r.gradient_variance for r in recs]),
        ";".join(f"{name}:{count}" for name, count in wins.items()),
    ]


def write_summary(out_dir: Path, runs: Sequence[RunResult], n_clients: int) -> Path:
    return write_table(
        Path(out_dir) / "summary.csv",
        SUMMARY_COLUMNS,
        [summary_row(run, n_clients) for run in runs],
    )


def write_curves(out_dir: Path, runs: Sequence[RunResult]) -> Path:
    """Per-round means over seeds, one block per (method, alpha)."""
    cells: Dict[Tuple[str, float], List[RunResult]] = {}
    for run in runs:
        cells.setdefault((run.method, run.alpha), []).append(run)

    rows = []
    for (method, alpha), group in sorted(cells.items()):
        acc = mean_over_runs([[r.accuracy for r in run.records] for run in group])
        loss = mean_over_runs([[r.loss for r in run.records] for run in group])
        priv = mean_over_runs([[r.per_round_privacy for r in run.records] for run in group])
        for t, (a, l, p) in enumerate(zip(acc, loss, priv)):
            rows.append([method, alpha, t, len(group), a, l, p])
    return write_table(
        Path(out_dir) / "curves.csv",
        ["method", "alpha", "round", "runs", "mean_accuracy", "mean_loss", "mean_per_round_privacy"],
        rows,
    )


def write_heterogeneity(out_dir: Path, runs: Sequence[RunResult]) -> Path:
    """Best accuracy per (method, alpha) over every seed."""
    by_alpha: Dict[str, Dict[float, List[List[RoundRecord]]]] = {}
    for run in runs:
        by_alpha.setdefault(run.method, {}).setdefault(run.alpha, []).append(list(run.records))

    rows = [
        [method, alpha, best]
        for method, histories in by_alpha.items()
        for alpha, best in max_accuracy_by_alpha(histories).items()
    ]
    return write_table(Path(out_dir) / "heterogeneity.csv", ["method", "alpha", "max_accuracy"], rows)


def write_heatmap(out_dir: Path, method: str, runs: Sequence[RunResult], n_clients: int) -> Path:
    """Selection counts per client and alpha, summed over seeds."""
    histories: Dict[float, List[RoundRecord]] = {}
    for run in runs:
        histories.setdefault(run.alpha, []).extend(run.records)
    table = export_heatmap(histories, n_clients)
    header = ["client_id"] + [f"a{alpha!r}" for alpha in table.alphas]
    return write_table(Path(out_dir) / f"heatmap_{method}.csv", header, table.rows())


def write_frequency(out_dir: Path, method: str, runs: Sequence[RunResult], n_clients: int) -> Path:
    rows = []
    for run in runs:
        if not run.records:
            continue
        counts = participation_summary(run.records, n_clients).counts
        for times, clients in selection_frequency(counts).items():
            rows.append([run.run_id, run.alpha, run.seed, times, clients])
    return write_table(
        Path(out_dir) / f"frequency_{method}.csv",
        ["run_id", "alpha", "seed", "times_selected", "clients"],
        rows,
    )


def write_strategy_timeline(out_dir: Path, runs: Sequence[RunResult]) -> Path:
    rows = [
        [run.run_id, run.alpha, run.seed, t, winner]
        for run in runs
        if run.method == "qubo"
        for t, winner in sorted(strategy_timeline(run.records).items())
    ]
    return write_table(
        Path(out_dir) / "strategy_timeline.csv",
        ["run_id", "alpha", "seed", "round", "winning_strategy"],
        rows,
    )


def write_strategy_histogram(path: Path, runs: Sequence[RunResult]) -> Dict[str, int]:
    wins = strategy_histogram(run.records for run in runs if run.method == "qubo")
    write_table(path, ["strategy", "wins"], sorted(wins.items()))
    return wins


def write_participation_fairness(path: Path, runs: Sequence[RunResult], n_clients: int) -> Path:
    rows = []
    for run in runs:
        if not run.records:
            continue
        part = participation_summary(run.records, n_clients)
        rows.append(
            [run.run_id, run.method, run.alpha, run.seed]
            + list(participation_quantiles(part.counts, part.rounds))
            + [part.never_selected_fraction, part.cumulative_privacy]
        )
    return write_table(
        path,
        ["run_id", "method", "alpha", "seed", "rate_min", "rate_q1", "rate_median", "rate_q3", "rate_max",
         "never_selected_fraction", "cumulative_privacy"],
        rows,
    )
