import logging
import os
import sys

# Process-level settings; experiment hyperparameters live in the INI config.
LOG_LEVEL = os.getenv("FEDQUBO_LOG_LEVEL", "INFO").upper()
DEFAULT_JOBS = int(os.getenv("FEDQUBO_JOBS", "1"))

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = LOG_LEVEL) -> None:
    """Install a single stderr handler. Only the CLI calls this."""
    root = logging.getLogger()
    if any(getattr(h, "_fedqubo", False) for h in root.handlers):
        root.setLevel(level)
        return

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._fedqubo = True
    root.addHandler(handler)
    root.setLevel(level)
