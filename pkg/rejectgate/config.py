import os
from dataclasses import dataclass

from dotenv import load_dotenv

from .errors import ConfigError

# Pick up a local .env before any defaults are read.
load_dotenv()

os.environ.setdefault("REJECT_GATE_THREADS", "0")
os.environ.setdefault("REJECT_GATE_LOG_LEVEL", "INFO")
os.environ.setdefault("REJECT_GATE_SEED", "0")


@dataclass
class RejectionConfiguration:
    """Defaults for calibration, bootstrap and split parameters.

    Attributes:
        grid_step (float): Step of the confidence and median grids.
        resamples (int): Bootstrap resamples per interval.
        alpha (float): Coverage complement of bootstrap intervals.
        empty_median (float): Median assigned to images with no surviving boxes.
        dev_of_current (float): Share of target-season images kept for development.
        train_of_dev (float): Share of development images assigned to training.
        oracle_fractions (tuple): Rejected fractions reported by oracle curves.
        log_level (str): Logging level used by the CLI.
    """

    grid_step: float = 0.01
    resamples: int = 1000
    alpha: float = 0.05
    empty_median: float = 0.0
    dev_of_current: float = 0.8
    train_of_dev: float = 0.8
    oracle_fractions: tuple = tuple(round(0.1 * i, 1) for i in range(10))
    log_level: str = os.environ["REJECT_GATE_LOG_LEVEL"]


def resolve_threads(value=None) -> int:
    """Worker count from an explicit value or REJECT_GATE_THREADS (0 means auto)."""
    raw = os.getenv("REJECT_GATE_THREADS", "0") if value is None else value
    try:
        threads = int(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"REJECT_GATE_THREADS must be an integer, got {raw!r}")
    if threads < 0:
        raise ConfigError(f"REJECT_GATE_THREADS must be >= 0, got {threads}")
    return threads or (os.cpu_count() or 1)


def resolve_seed(value=None) -> int:
    """Base seed from an explicit value or REJECT_GATE_SEED."""
    raw = os.getenv("REJECT_GATE_SEED", "0") if value is None else value
    try:
        seed = int(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"REJECT_GATE_SEED must be an integer, got {raw!r}")
    if not 0 <= seed < 2**64:
        raise ConfigError(f"REJECT_GATE_SEED must lie in [0, 2**64), got {seed}")
    return seed


config = RejectionConfiguration()
