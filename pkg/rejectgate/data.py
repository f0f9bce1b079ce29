import csv
import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Dict, Iterable, List, Literal, Mapping, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError, DataValidationError, SplitError
from .model import ImageRecord, SeasonId

SCORE_DECIMALS = 6
ROLES = ("train", "val", "test")


# --- Wire Models ---
class BoxRecord(BaseModel):
    """One detector box; any geometry fields ride along untouched."""

    model_config = ConfigDict(extra="allow")

    score: float = Field(ge=0.0, le=1.0, strict=True, description="Box confidence in [0, 1]")


class DetectionRecord(BaseModel):
    """One line of a dataset file."""

    model_config = ConfigDict(extra="allow")

    image_id: str = Field(min_length=1, description="Unique image identifier")
    season: str = Field(description="Season label such as K19 or S20")
    boxes: List[BoxRecord] = Field(description="Detector boxes for the image; [] when none")
    gt_count: int = Field(ge=0, strict=True, description="Annotated pest count")

    @field_validator("season")
    @classmethod
    def season_parses(cls, value: str) -> str:
        SeasonId.parse(value)
        return value

    def to_image(self) -> ImageRecord:
        geometry = tuple(box.model_extra or {} for box in self.boxes)
        return ImageRecord(
            image_id=self.image_id,
            season=SeasonId.parse(self.season),
            scores=tuple(box.score for box in self.boxes),
            gt_count=self.gt_count,
            geometry=geometry if any(geometry) else (),
        )


def _validation_message(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in item['loc']) or 'record'}: {item['msg']}" for item in error.errors()
    )


def load_dataset(path: Union[str, Path]) -> List[ImageRecord]:
    """Read a JSON Lines dataset, validating every record; file order is kept."""
    path = Path(path)
    if not path.is_file():
        raise DataValidationError(f"Dataset file not found: {path}")
    images: List[ImageRecord] = []
    seen: Dict[str, int] = {}
    unknown_fields: set = set()
    with path.open("rb") as handle:
        for line_no, raw in enumerate(handle, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise DataValidationError(f"{path.name} line {line_no}: not valid UTF-8 ({e.reason})") from e
            if not line.strip():
                continue
            try:
                record = DetectionRecord.model_validate_json(line)
            except ValidationError as e:
                raise DataValidationError(f"{path.name} line {line_no}: {_validation_message(e)}") from e
            if record.image_id in seen:
                raise DataValidationError(
                    f"{path.name} line {line_no}: duplicate image_id {record.image_id!r} "
                    f"(first seen on line {seen[record.image_id]})"
                )
            seen[record.image_id] = line_no
            unknown_fields.update((record.model_extra or {}).keys())
            try:
                images.append(record.to_image())
            except DataValidationError as e:
                raise DataValidationError(f"{path.name} line {line_no}: {e}") from e
    if unknown_fields:
        logging.warning(f"Ignoring unknown fields in {path.name}: {', '.join(sorted(unknown_fields))}")
    logging.info(f"Loaded {len(images)} images from {path.name}")
    return images


def image_to_wire(image: ImageRecord) -> Dict[str, Any]:
    boxes = []
    for index, score in enumerate(image.scores):
        box: Dict[str, Any] = {"score": round(score, SCORE_DECIMALS)}
        if image.geometry:
            box.update(image.geometry[index])
        boxes.append(box)
    return {"image_id": image.image_id, "season": image.season.label, "boxes": boxes, "gt_count": image.gt_count}


def write_dataset(images: Iterable[ImageRecord], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for image in images:
            handle.write(json.dumps(image_to_wire(image), separators=(",", ":")) + "\n")
    return path


# --- Seasonal Splits ---
class SplitKind(str, Enum):
    HISTORIC = "historic"
    PRESENT_AWARE = "present"


@dataclass(frozen=True)
class SplitRatios:
    dev_of_current: float = 0.8
    train_of_dev: float = 0.8

    def __post_init__(self):
        for name in ("dev_of_current", "train_of_dev"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise SplitError(f"Split ratio {name} must lie in [0, 1], got {getattr(self, name)}")


@dataclass(frozen=True)
class SeasonalSplit:
    target_season: SeasonId
    kind: SplitKind
    assignment: Mapping[str, str]

    def ids(self, role: str) -> List[str]:
        return sorted(image_id for image_id, assigned in self.assignment.items() if assigned == role)


def _seeded_order(images: Sequence[ImageRecord], seed: int, stream: int) -> List[ImageRecord]:
    ordered = sorted(images, key=lambda image: image.image_id)
    rng = np.random.default_rng([seed, stream])
    return [ordered[i] for i in rng.permutation(len(ordered))]


def build_split(
    images: Sequence[ImageRecord],
    target: SeasonId,
    kind: SplitKind,
    ratios: SplitRatios = SplitRatios(),
    seed: int = 0,
) -> SeasonalSplit:
    """Historic or present-aware train/val/test assignment for ``target``.

    The target season is cut into a development pool and a test set the same
    way for both kinds, so their test sets match. Historic development data
    is every earlier season; present-aware development data adds the pool.
    Images from later seasons are left unassigned.
    """
    kind = SplitKind(kind)
    if not 0 <= seed < 2**64:
        raise SplitError(f"Split seed must be a 64-bit unsigned integer, got {seed}")
    current = [image for image in images if image.season == target]
    prior = [image for image in images if image.season < target]
    if not current:
        raise SplitError(f"No images belong to target season {target}")
    if kind is SplitKind.HISTORIC and not prior:
        raise SplitError(f"Historic split for {target} needs images from an earlier season; none exist")

    shuffled = _seeded_order(current, seed, 0)
    n_pool = int(ratios.dev_of_current * len(shuffled))
    pool, test = shuffled[:n_pool], shuffled[n_pool:]
    dev = prior + (pool if kind is SplitKind.PRESENT_AWARE else [])

    dev_order = _seeded_order(dev, seed, 1)
    n_train = int(ratios.train_of_dev * len(dev_order))
    assignment = {image.image_id: "train" for image in dev_order[:n_train]}
    assignment.update({image.image_id: "val" for image in dev_order[n_train:]})
    assignment.update({image.image_id: "test" for image in test})
    split = SeasonalSplit(target_season=target, kind=kind, assignment=dict(sorted(assignment.items())))
    logging.info(
        f"{kind.value} split for {target}: train={len(split.ids('train'))} "
        f"val={len(split.ids('val'))} test={len(split.ids('test'))}"
    )
    return split


def write_split_manifest(split: SeasonalSplit, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["image_id", "role"])
        for image_id, role in sorted(split.assignment.items()):
            writer.writerow([image_id, role])
    return path


def read_split_manifest(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise DataValidationError(f"Split manifest not found: {path}")
    try:
        with path.open(encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames != ["image_id", "role"]:
                raise DataValidationError(f"{path.name}: header must be image_id,role")
            assignment = {}
            for line_no, row in enumerate(reader, start=2):
                if row["role"] not in ROLES:
                    raise DataValidationError(f"{path.name} line {line_no}: unknown role {row['role']!r}")
                assignment[row["image_id"]] = row["role"]
    except UnicodeDecodeError as e:
        raise DataValidationError(f"{path.name}: not valid UTF-8 ({e.reason})") from e
    return assignment


def select_role(images: Sequence[ImageRecord], assignment: Mapping[str, str], role: str) -> List[ImageRecord]:
    return [image for image in images if assignment.get(image.image_id) == role]


# --- Synthetic Generator ---
class UniformSpec(BaseModel):
    kind: Literal["uniform"]
    low: float
    high: float

    @model_validator(mode="after")
    def ordered(self):
        if self.low > self.high:
            raise ValueError(f"uniform low {self.low} exceeds high {self.high}")
        return self


class BetaSpec(BaseModel):
    kind: Literal["beta"]
    a: float = Field(gt=0.0)
    b: float = Field(gt=0.0)


class PoissonSpec(BaseModel):
    kind: Literal["poisson"]
    lam: float = Field(ge=0.0)


class ConstantSpec(BaseModel):
    kind: Literal["constant"]
    value: float


Distribution = Annotated[Union[UniformSpec, BetaSpec, PoissonSpec, ConstantSpec], Field(discriminator="kind")]


def _check_count_dist(dist, name: str):
    if isinstance(dist, BetaSpec):
        raise ValueError(f"{name}: beta does not produce counts")
    if isinstance(dist, UniformSpec) and (dist.low < 0 or dist.low != int(dist.low) or dist.high != int(dist.high)):
        raise ValueError(f"{name}: uniform counts need non-negative integer bounds")
    if isinstance(dist, ConstantSpec) and (dist.value < 0 or dist.value != int(dist.value)):
        raise ValueError(f"{name}: constant counts must be non-negative integers")


def _check_score_dist(dist, name: str):
    if isinstance(dist, PoissonSpec):
        raise ValueError(f"{name}: poisson does not produce scores")
    if isinstance(dist, UniformSpec) and not (0.0 <= dist.low and dist.high <= 1.0):
        raise ValueError(f"{name}: uniform scores must lie in [0, 1]")
    if isinstance(dist, ConstantSpec) and not 0.0 <= dist.value <= 1.0:
        raise ValueError(f"{name}: constant scores must lie in [0, 1]")


class PopulationConfig(BaseModel):
    """A group of images sharing count and score distributions."""

    name: str = Field(min_length=1, description="Prefix of generated image ids")
    season: str = Field(description="Season label applied to every image")
    image_count: int = Field(ge=0, description="Number of images to generate")
    gt_count: Distribution = Field(description="Distribution of annotated counts")
    true_score: Distribution = Field(description="Score distribution of boxes on real objects")
    spurious_count: Distribution = Field(description="Distribution of false-positive box counts")
    spurious_score: Distribution = Field(description="Score distribution of false-positive boxes")
    detection_rate: float = Field(default=1.0, ge=0.0, le=1.0, description="Chance a real object gets a box")

    @field_validator("season")
    @classmethod
    def season_parses(cls, value: str) -> str:
        try:
            SeasonId.parse(value)
        except DataValidationError as e:
            raise ValueError(str(e))
        return value

    @model_validator(mode="after")
    def distributions_fit(self):
        _check_count_dist(self.gt_count, "gt_count")
        _check_count_dist(self.spurious_count, "spurious_count")
        _check_score_dist(self.true_score, "true_score")
        _check_score_dist(self.spurious_score, "spurious_score")
        return self


class GeneratorConfig(BaseModel):
    seed: int = Field(default=0, ge=0, lt=2**64, description="Seed of the generator")
    populations: List[PopulationConfig] = Field(min_length=1)

    @model_validator(mode="after")
    def unique_names(self):
        names = [population.name for population in self.populations]
        if len(names) != len(set(names)):
            raise ValueError("population names must be unique")
        return self


def load_generator_config(path: Union[str, Path], seed: Optional[int] = None) -> GeneratorConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Generator config not found: {path}")
    try:
        cfg = GeneratorConfig.model_validate_json(path.read_text(encoding="utf-8"))
        if seed is not None:
            cfg = GeneratorConfig.model_validate({**cfg.model_dump(), "seed": seed})
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path.name}: not valid UTF-8 ({e.reason})") from e
    except ValidationError as e:
        raise ConfigError(f"{path.name}: {_validation_message(e)}") from e
    return cfg


def _draw_counts(rng: np.random.Generator, dist, size: int) -> np.ndarray:
    if isinstance(dist, PoissonSpec):
        return rng.poisson(dist.lam, size)
    if isinstance(dist, UniformSpec):
        return rng.integers(int(dist.low), int(dist.high), size=size, endpoint=True)
    return np.full(size, int(dist.value))


def _draw_scores(rng: np.random.Generator, dist, size: int) -> np.ndarray:
    if isinstance(dist, BetaSpec):
        scores = rng.beta(dist.a, dist.b, size)
    elif isinstance(dist, UniformSpec):
        scores = rng.uniform(dist.low, dist.high, size)
    else:
        scores = np.full(size, dist.value)
    return np.clip(np.round(scores, SCORE_DECIMALS), 0.0, 1.0)


def generate_synthetic(cfg: GeneratorConfig) -> List[ImageRecord]:
    """Images whose boxes mix detections of real objects with false positives."""
    rng = np.random.default_rng(cfg.seed)
    images: List[ImageRecord] = []
    for population in cfg.populations:
        season = SeasonId.parse(population.season)
        gt_counts = _draw_counts(rng, population.gt_count, population.image_count)
        for index, gt in enumerate(gt_counts):
            detected = rng.binomial(int(gt), population.detection_rate)
            n_spurious = int(_draw_counts(rng, population.spurious_count, 1)[0])
            scores = np.concatenate([
                _draw_scores(rng, population.true_score, detected),
                _draw_scores(rng, population.spurious_score, n_spurious),
            ])
            images.append(ImageRecord(
                image_id=f"{population.name}-{index:05d}",
                season=season,
                scores=tuple(float(s) for s in rng.permutation(scores)),
                gt_count=int(gt),
            ))
    logging.info(f"Generated {len(images)} images from {len(cfg.populations)} populations (seed {cfg.seed})")
    return images
