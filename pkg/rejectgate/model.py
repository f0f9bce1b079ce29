"""Domain types and the gating arithmetic shared by every other module."""

import math
import re
import statistics
from bisect import bisect_left
from dataclasses import dataclass, field
from enum import Enum
from functools import total_ordering
from typing import Any, Dict, List, Optional, Tuple

from .errors import DataValidationError

SEASON_PATTERN = re.compile(r"^([SK])(\d{2})$")

# Summer (March-June) precedes kharif (July-December) within a calendar year.
SEASON_ORDER = {"S": 0, "K": 1}


@total_ordering
@dataclass(frozen=True)
class SeasonId:
    """A cotton season label such as ``K19`` or ``S20``."""

    kind: str
    year: int

    def __post_init__(self):
        if self.kind not in SEASON_ORDER:
            raise DataValidationError(f"Unknown season type {self.kind!r}; expected S or K")
        if not 0 <= self.year <= 99:
            raise DataValidationError(f"Season year must have two digits, got {self.year}")

    @classmethod
    def parse(cls, label: str) -> "SeasonId":
        match = SEASON_PATTERN.match(label or "")
        if not match:
            raise DataValidationError(f"Invalid season label {label!r}; expected S or K followed by two digits")
        return cls(kind=match.group(1), year=int(match.group(2)))

    @property
    def label(self) -> str:
        return f"{self.kind}{self.year:02d}"

    @property
    def sort_key(self) -> Tuple[int, int]:
        return (self.year, SEASON_ORDER[self.kind])

    def __lt__(self, other):
        if not isinstance(other, SeasonId):
            return NotImplemented
        return self.sort_key < other.sort_key

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class ImageRecord:
    """One photographed trap image.

    ``geometry`` holds optional per-box extra fields (coordinates) aligned with
    ``scores``; it is carried for round-tripping and never used for counting.
    """

    image_id: str
    season: SeasonId
    scores: Tuple[float, ...]
    gt_count: int
    geometry: Tuple[Dict[str, Any], ...] = field(default=(), compare=False, hash=False, repr=False)

    def __post_init__(self):
        if not self.image_id:
            raise DataValidationError("image_id must be non-empty")
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        for s in self.scores:
            if math.isnan(s) or not 0.0 <= s <= 1.0:
                raise DataValidationError(f"Image {self.image_id}: score {s} outside [0, 1]")
        if not isinstance(self.gt_count, int) or isinstance(self.gt_count, bool) or self.gt_count < 0:
            raise DataValidationError(f"Image {self.image_id}: gt_count must be a non-negative integer")
        if self.geometry and len(self.geometry) != len(self.scores):
            raise DataValidationError(f"Image {self.image_id}: geometry does not align with scores")
        object.__setattr__(self, "_ascending", tuple(sorted(self.scores)))


class LevelKind(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"
    GLOBAL = "global"

    @property
    def subscript(self) -> str:
        return self.value[0]

    @classmethod
    def from_subscript(cls, token: str) -> "LevelKind":
        for kind in cls:
            if token in (kind.value, kind.subscript):
                return kind
        raise ValueError(f"Unknown level kind {token!r}")


def format_threshold(value: float) -> str:
    """Shortest rendering with at least two decimals (0.17, 0.50, 0.125)."""
    text = f"{value:.6f}".rstrip("0")
    whole, _, decimals = text.partition(".")
    return f"{whole}.{decimals.ljust(2, '0')}"


@dataclass(frozen=True)
class RejectionLevel:
    """A (confidence threshold, median cutoff) pair.

    ``kind`` is None for levels supplied by hand rather than calibrated.
    """

    conf_threshold: float
    median_threshold: float
    kind: Optional[LevelKind] = None

    def __post_init__(self):
        for name in ("conf_threshold", "median_threshold"):
            value = getattr(self, name)
            if math.isnan(value) or not 0.0 <= value <= 1.0:
                raise DataValidationError(f"{name} must lie in [0, 1], got {value}")

    @property
    def notation(self) -> str:
        """Tuple notation, e.g. ``[0.17, 0.22]_g``."""
        text = f"[{format_threshold(self.conf_threshold)}, {format_threshold(self.median_threshold)}]"
        return f"{text}_{self.kind.subscript}" if self.kind else text

    @classmethod
    def parse(cls, literal: str) -> "RejectionLevel":
        """Parse ``conf,median`` with an optional third ``a|r|g`` token."""
        parts = [p.strip() for p in literal.split(",")]
        if len(parts) not in (2, 3):
            raise ValueError(f"Level {literal!r} must look like 0.17,0.22 or 0.17,0.22,g")
        kind = LevelKind.from_subscript(parts[2]) if len(parts) == 3 else None
        return cls(float(parts[0]), float(parts[1]), kind)


@dataclass(frozen=True)
class GateDecision:
    accepted: bool
    surviving_count: int
    survivor_median: float


def surviving_scores(image: ImageRecord, t: float) -> List[float]:
    """Scores at or above ``t``, ascending."""
    ascending = image._ascending
    return list(ascending[bisect_left(ascending, t):])


def predicted_count(image: ImageRecord, t: float) -> int:
    ascending = image._ascending
    return len(ascending) - bisect_left(ascending, t)


def absolute_error(image: ImageRecord, t: float) -> int:
    return abs(predicted_count(image, t) - image.gt_count)


def survivor_median(image: ImageRecord, t: float, empty_median: float = 0.0) -> float:
    """Sample median of the surviving scores; ``empty_median`` when none survive."""
    survivors = surviving_scores(image, t)
    if not survivors:
        return empty_median
    return statistics.median(survivors)


def gate(image: ImageRecord, level: RejectionLevel, empty_median: float = 0.0) -> GateDecision:
    median = survivor_median(image, level.conf_threshold, empty_median)
    return GateDecision(
        accepted=median >= level.median_threshold,
        surviving_count=predicted_count(image, level.conf_threshold),
        survivor_median=median,
    )
