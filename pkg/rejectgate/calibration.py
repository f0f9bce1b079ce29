"""Rejection-level calibration: confidence sweeps, median sweeps and level selection.

A confidence sweep tunes the box threshold for MAE over all images. With the
threshold fixed, a median sweep partitions images by the median of their
surviving boxes and scores each cutoff by the common-language effect size
between the accepted and rejected absolute errors. The cutoff with the
largest effect is the *absolute* level; the cutoff that rejects the fewest
images while staying statistically tied with that maximum is the *relative*
level. When both coincide the level is *global*.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

from .errors import CalibrationError, DataValidationError, DegeneratePartitionError
from .model import ImageRecord, LevelKind, RejectionLevel, absolute_error, gate, survivor_median
from .parallel import map_ordered
from .stats import (
    BootstrapConfig,
    IntervalEstimate,
    bootstrap_effect_size_ci,
    bootstrap_mean_ci,
    mean_absolute_error,
)


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    mae: IntervalEstimate
    n_images: int


@dataclass(frozen=True)
class MedianSweepPoint:
    median: float
    effect: Optional[IntervalEstimate]
    rejected_fraction: float
    n_accepted: int
    n_rejected: int

    @property
    def defined(self) -> bool:
        return self.effect is not None


@dataclass(frozen=True)
class CalibrationReport:
    conf_threshold: float
    median_sweep: Tuple[MedianSweepPoint, ...]
    absolute: RejectionLevel
    relative: RejectionLevel
    is_global: bool
    confidence_sweep: Tuple[SweepPoint, ...] = ()

    @property
    def levels(self) -> Tuple[RejectionLevel, ...]:
        """Distinct levels: one global level, or the absolute and relative pair."""
        return (self.absolute,) if self.is_global else (self.absolute, self.relative)

    def point_for(self, level: RejectionLevel) -> MedianSweepPoint:
        return next(p for p in self.median_sweep if p.median == level.median_threshold)


@dataclass(frozen=True)
class LevelEvaluation:
    """Accepted-set MAE of a fixed level, next to the ungated MAE at its threshold."""

    level: RejectionLevel
    mae: IntervalEstimate
    ungated_mae: float
    rejected_fraction: float
    n_accepted: int
    n_rejected: int

    @property
    def improvement(self) -> float:
        """Relative MAE reduction against the ungated MAE (0 when that is already 0)."""
        if self.ungated_mae == 0:
            return 0.0
        return (self.ungated_mae - self.mae.point) / self.ungated_mae


def threshold_grid(step: float = 0.01) -> List[float]:
    """Evenly spaced values from 0 to 1 inclusive."""
    if not 0.0 < step <= 1.0:
        raise DataValidationError(f"Grid step must lie in (0, 1], got {step}")
    count = int(round(1.0 / step))
    grid = [round(i * step, 10) for i in range(count + 1)]
    return [value for value in grid if value <= 1.0]


def _check_grid(grid: Sequence[float]) -> List[float]:
    grid = list(grid)
    if not grid:
        raise DataValidationError("Grid must contain at least one value")
    if any(not 0.0 <= value <= 1.0 for value in grid):
        raise DataValidationError("Grid values must lie in [0, 1]")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DataValidationError("Grid values must be strictly increasing")
    return grid


def sweep_confidence(
    images: Sequence[ImageRecord],
    grid: Sequence[float],
    cfg: BootstrapConfig,
    threads: Optional[int] = None,
) -> List[SweepPoint]:
    """MAE over all images (no gating) at every confidence threshold."""
    if not images:
        raise DataValidationError("Confidence sweep needs at least one image")
    grid = _check_grid(grid)

    def evaluate(indexed: Tuple[int, float]) -> SweepPoint:
        index, t = indexed
        aes = [absolute_error(image, t) for image in images]
        return SweepPoint(threshold=t, mae=bootstrap_mean_ci(aes, cfg.derive(index)), n_images=len(aes))

    points = map_ordered(evaluate, enumerate(grid), threads)
    logging.info(f"Swept {len(points)} confidence thresholds over {len(images)} images")
    return points


def optimal_confidence(sweep: Sequence[SweepPoint]) -> float:
    """Threshold with the lowest MAE; the smallest threshold wins ties."""
    if not sweep:
        raise DataValidationError("Cannot pick a threshold from an empty sweep")
    best = min(sweep, key=lambda point: (point.mae.point, point.threshold))
    return best.threshold


def sweep_median(
    images: Sequence[ImageRecord],
    conf_threshold: float,
    grid: Sequence[float],
    cfg: BootstrapConfig,
    empty_median: float = 0.0,
    threads: Optional[int] = None,
) -> List[MedianSweepPoint]:
    """Effect size between accepted and rejected AEs at every median cutoff.

    Cutoffs that leave either partition empty are emitted with ``effect=None``.
    """
    if not images:
        raise DataValidationError("Median sweep needs at least one image")
    if not 0.0 <= conf_threshold <= 1.0:
        raise DataValidationError(f"Confidence threshold must lie in [0, 1], got {conf_threshold}")
    grid = _check_grid(grid)
    medians = [survivor_median(image, conf_threshold, empty_median) for image in images]
    aes = [absolute_error(image, conf_threshold) for image in images]

    def evaluate(indexed: Tuple[int, float]) -> MedianSweepPoint:
        index, m = indexed
        accepted = [ae for median, ae in zip(medians, aes) if median >= m]
        rejected = [ae for median, ae in zip(medians, aes) if median < m]
        effect = None
        if accepted and rejected:
            effect = bootstrap_effect_size_ci(accepted, rejected, cfg.derive(index))
        return MedianSweepPoint(
            median=m,
            effect=effect,
            rejected_fraction=len(rejected) / len(images),
            n_accepted=len(accepted),
            n_rejected=len(rejected),
        )

    points = map_ordered(evaluate, enumerate(grid), threads)
    degenerate = sum(not point.defined for point in points)
    if degenerate:
        logging.info(f"{degenerate} of {len(points)} median cutoffs left a partition empty at t={conf_threshold}")
    return points


def select_absolute(points: Sequence[MedianSweepPoint]) -> RejectionLevel:
    """Median cutoff with the largest effect size; the smallest cutoff wins ties.

    The returned level has ``conf_threshold`` 0; :func:`calibrate` fills it in.
    """
    defined = [point for point in points if point.defined]
    if not defined:
        raise CalibrationError("Every median cutoff left a partition empty; no level can be selected")
    best = min(defined, key=lambda point: (-point.effect.point, point.median))
    return RejectionLevel(conf_threshold=0.0, median_threshold=best.median, kind=LevelKind.ABSOLUTE)


def select_relative(points: Sequence[MedianSweepPoint], absolute: RejectionLevel) -> RejectionLevel:
    """Fewest rejections among cutoffs whose effect interval reaches the absolute effect."""
    anchor = next(
        (point for point in points if point.defined and point.median == absolute.median_threshold), None
    )
    if anchor is None:
        raise CalibrationError(f"Absolute cutoff {absolute.median_threshold} is not a defined sweep point")
    candidates = [anchor] + [
        point for point in points if point.defined and point.effect.hi >= anchor.effect.point
    ]
    best = min(candidates, key=lambda point: (point.rejected_fraction, point.median))
    return replace(absolute, median_threshold=best.median, kind=LevelKind.RELATIVE)


def calibrate(
    images: Sequence[ImageRecord],
    conf_threshold: Optional[float] = None,
    confidence_grid: Optional[Sequence[float]] = None,
    median_grid: Optional[Sequence[float]] = None,
    cfg: BootstrapConfig = BootstrapConfig(),
    empty_median: float = 0.0,
    threads: Optional[int] = None,
) -> CalibrationReport:
    """Select absolute, relative and (when they coincide) global rejection levels.

    Without ``conf_threshold`` the MAE-optimal threshold of a confidence sweep
    is used. The confidence and median sweeps draw from separate streams of
    ``cfg.seed``.
    """
    if not images:
        raise DataValidationError("Calibration needs at least one image")
    confidence_sweep: Tuple[SweepPoint, ...] = ()
    if conf_threshold is None:
        grid = confidence_grid if confidence_grid is not None else threshold_grid()
        confidence_sweep = tuple(sweep_confidence(images, grid, cfg.derive(0), threads))
        conf_threshold = optimal_confidence(confidence_sweep)
        logging.info(f"MAE-optimal confidence threshold: {conf_threshold}")

    grid = median_grid if median_grid is not None else threshold_grid()
    points = tuple(sweep_median(images, conf_threshold, grid, cfg.derive(1), empty_median, threads))
    absolute = replace(select_absolute(points), conf_threshold=conf_threshold)
    relative = select_relative(points, absolute)
    is_global = absolute.median_threshold == relative.median_threshold
    if is_global:
        absolute = replace(absolute, kind=LevelKind.GLOBAL)
        relative = replace(relative, kind=LevelKind.GLOBAL)
    report = CalibrationReport(
        conf_threshold=conf_threshold,
        median_sweep=points,
        absolute=absolute,
        relative=relative,
        is_global=is_global,
        confidence_sweep=confidence_sweep,
    )
    logging.info(f"Calibrated levels at t={conf_threshold}: {', '.join(l.notation for l in report.levels)}")
    return report


def evaluate_level(
    images: Sequence[ImageRecord],
    level: RejectionLevel,
    cfg: BootstrapConfig,
    empty_median: float = 0.0,
) -> LevelEvaluation:
    """MAE of the images a fixed level accepts; the level is never re-tuned."""
    if not images:
        raise DataValidationError("Evaluation needs at least one image")
    accepted = [image for image in images if gate(image, level, empty_median).accepted]
    if not accepted:
        raise DegeneratePartitionError(f"Level {level.notation} rejects every one of {len(images)} images")
    t = level.conf_threshold
    aes = [absolute_error(image, t) for image in accepted]
    return LevelEvaluation(
        level=level,
        mae=bootstrap_mean_ci(aes, cfg),
        ungated_mae=mean_absolute_error([absolute_error(image, t) for image in images]),
        rejected_fraction=(len(images) - len(accepted)) / len(images),
        n_accepted=len(accepted),
        n_rejected=len(images) - len(accepted),
    )
