"""Confidence-based sample rejection for detector-driven pest counting."""

__version__ = "0.1.0"

from .calibration import CalibrationReport, LevelEvaluation, calibrate, evaluate_level, sweep_confidence, sweep_median
from .errors import (
    CalibrationError,
    ConfigError,
    DataValidationError,
    DegenerateComputationError,
    DegeneratePartitionError,
    RejectGateError,
    SplitError,
    UsageError,
)
from .model import ImageRecord, LevelKind, RejectionLevel, SeasonId, absolute_error, gate, survivor_median
from .oracle import OracleMode, best_case_ae, oracle_curve
from .stats import BootstrapConfig, IntervalEstimate, bootstrap_effect_size_ci, common_language_effect_size

__all__ = [
    "BootstrapConfig",
    "CalibrationError",
    "CalibrationReport",
    "ConfigError",
    "DataValidationError",
    "DegenerateComputationError",
    "DegeneratePartitionError",
    "ImageRecord",
    "IntervalEstimate",
    "LevelEvaluation",
    "LevelKind",
    "OracleMode",
    "RejectGateError",
    "RejectionLevel",
    "SeasonId",
    "SplitError",
    "UsageError",
    "absolute_error",
    "best_case_ae",
    "bootstrap_effect_size_ci",
    "calibrate",
    "common_language_effect_size",
    "evaluate_level",
    "gate",
    "oracle_curve",
    "survivor_median",
    "sweep_confidence",
    "sweep_median",
]
