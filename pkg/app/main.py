"""Command line entry point.

    python -m app.main run [CONFIG] [--profile NAME] [--seed-override N] [--out DIR] [--jobs N]
    python -m app.main compare RESULT_DIR [--out DIR]
"""

import argparse
import logging
import sys
from typing import List, Optional

from app.config import DEFAULT_JOBS, configure_logging
from app.exceptions import ConfigError, FedQuboError
from app.services import experiment_service
from app.services.config_service import load_config, load_profile

logger = logging.getLogger("app.main")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedqubo",
        description="Federated learning simulator with QUBO-based client selection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the configured (method, alpha, seed) matrix")
    run.add_argument("config", nargs="?", help="path to an INI experiment config")
    run.add_argument("--profile", help="name of a shipped profile (smoke, mnist-paper-scaled, cinic-profile)")
    run.add_argument("--seed-override", type=int, default=None, help="replace the seed list with this seed")
    run.add_argument("--out", default=None, help="output directory (default: experiment.output_dir)")
    run.add_argument("--jobs", type=int, default=DEFAULT_JOBS, help="parallel (alpha, seed) cells")

    cmp_ = sub.add_parser("compare", help="align the methods of a result directory")
    cmp_.add_argument("result_dir")
    cmp_.add_argument("--out", default=None, help="where to write the comparison tables")
    return parser


def _run(args: argparse.Namespace) -> int:
    if (args.config is None) == (args.profile is None):
        raise ConfigError("give exactly one of CONFIG or --profile")
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}", field="jobs")

    cfg = load_profile(args.profile) if args.profile else load_config(args.config)
    report = experiment_service.run(cfg, out=args.out, seed_override=args.seed_override, jobs=args.jobs)
    print(f"{len(report.run_files)} run file(s) and {report.summary} written to {report.out_dir}")
    return EXIT_OK


def _compare(args: argparse.Namespace) -> int:
    report = experiment_service.compare(args.result_dir, out=args.out)
    print(f"comparison written to {report.comparison}")
    for name, wins in report.strategy_histogram.items():
        print(f"  {name:<18} {wins}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()

    try:
        return _run(args) if args.command == "run" else _compare(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (FedQuboError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
