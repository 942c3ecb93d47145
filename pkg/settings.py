"""
Runtime settings for the resampling engine.
Values come from the environment (a local .env file is honoured).
"""
import logging
import os

from dotenv import load_dotenv

load_dotenv()

# Output & execution
RESULTS_DIR = os.getenv("RESAMPLE_RESULTS_DIR", "results")
LOG_LEVEL = os.getenv("RESAMPLE_LOG_LEVEL", "INFO")
N_JOBS = int(os.getenv("RESAMPLE_N_JOBS", 1))
TORCH_THREADS = int(os.getenv("RESAMPLE_TORCH_THREADS", 1))
LOG_EVERY = int(os.getenv("RESAMPLE_LOG_EVERY", 50))

# Cells equal to one of these (after stripping) are read as missing; the empty string always is
MISSING_MARKERS = [
    m.strip() for m in os.getenv("RESAMPLE_MISSING_MARKERS", "NA,?,null").split(",") if m.strip()
]

CHECKPOINT_FORMAT_VERSION = 1

_LOG_FORMAT = "%(asctime)s:%(levelname)s:%(name)s: %(message)s"
_configured = False


def configure_logging(level: str = None):
    """Install one stream handler on the package loggers (safe to call repeatedly)."""
    global _configured
    level = (level or LOG_LEVEL).upper()
    for name in ("resampling_engine", "results_store", "app"):
        logger = logging.getLogger(name)
        logger.setLevel(level)
        if not _configured:
            handler = logging.StreamHandler()
            handler.setFormatter(logging.Formatter(_LOG_FORMAT))
            logger.addHandler(handler)
    _configured = True
