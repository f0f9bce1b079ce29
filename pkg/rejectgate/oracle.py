"""Oracle rejectors: lower bounds on MAE when the worst images may be discarded.

Neither oracle is deployable; both need the ground truth to rank images.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from .errors import DataValidationError, UsageError
from .model import ImageRecord, absolute_error, predicted_count
from .stats import mean_absolute_error


class OracleMode(str, Enum):
    CONFIDENCE_AWARE = "aware"
    BEST_CASE = "best"


@dataclass(frozen=True)
class OraclePoint:
    fraction: float
    mae: float
    n_kept: int


@dataclass(frozen=True)
class OracleCurve:
    mode: OracleMode
    threshold: Optional[float]
    points: Tuple[OraclePoint, ...]


def best_case_ae(image: ImageRecord, thresholds: Optional[Sequence[float]] = None) -> int:
    """Lowest AE over confidence thresholds.

    By default every achievable count is tried: each distinct score as a
    threshold, plus one above the maximum score (count 0). ``thresholds``
    restricts the candidates to the given values.
    """
    if thresholds is not None:
        if not thresholds:
            raise UsageError("Best-case candidate threshold set is empty")
        return min(absolute_error(image, t) for t in thresholds)
    # Threshold at a distinct score keeps every box from there up.
    counts = [predicted_count(image, value) for value in set(image.scores)]
    counts.append(0)
    return min(abs(count - image.gt_count) for count in counts)


def _check_fractions(fractions: Sequence[float]) -> List[float]:
    if not fractions:
        raise UsageError("At least one rejected fraction is required")
    for f in fractions:
        if not 0.0 <= f < 1.0:
            raise UsageError(f"Rejected fraction {f} must lie in [0, 1)")
    return sorted(set(fractions))


def oracle_curve(
    images: Sequence[ImageRecord],
    mode: OracleMode,
    fractions: Sequence[float],
    threshold: Optional[float] = None,
    threshold_set: Optional[Sequence[float]] = None,
) -> OracleCurve:
    """MAE after dropping ``floor(f * n)`` images with the highest AE, per fraction."""
    if not images:
        raise DataValidationError("Oracle curves need at least one image")
    fractions = _check_fractions(fractions)
    mode = OracleMode(mode)
    if mode is OracleMode.CONFIDENCE_AWARE:
        if threshold is None:
            raise UsageError("The confidence-aware oracle needs a confidence threshold")
        aes = [absolute_error(image, threshold) for image in images]
    else:
        aes = [best_case_ae(image, threshold_set) for image in images]

    # Highest AE first; image_id keeps the order reproducible among ties.
    ranked = sorted(zip(aes, (image.image_id for image in images)), key=lambda pair: (-pair[0], pair[1]))
    ordered = [ae for ae, _ in ranked]
    n = len(ordered)
    points = []
    for f in fractions:
        # Rounding guards against products like 0.29 * 100 = 28.999...
        dropped = min(math.floor(round(f * n, 9)), n - 1)
        kept = ordered[dropped:]
        points.append(OraclePoint(fraction=f, mae=mean_absolute_error(kept), n_kept=len(kept)))
    return OracleCurve(mode=mode, threshold=threshold if mode is OracleMode.CONFIDENCE_AWARE else None,
                       points=tuple(points))
