import os
import sys
from pathlib import Path
from typing import List

import pytest

# Add the package root to path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from rejectgate.data import load_generator_config, generate_synthetic, write_dataset
from rejectgate.model import ImageRecord, SeasonId
from rejectgate.stats import BootstrapConfig

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "rejectgate" / "scenarios"


def make_image(image_id: str, scores, gt_count: int, season: str = "K19") -> ImageRecord:
    """Build an ImageRecord with a parsed season label."""
    return ImageRecord(image_id=image_id, season=SeasonId.parse(season), scores=tuple(scores), gt_count=gt_count)


@pytest.fixture
def sample_images() -> List[ImageRecord]:
    """Six hand-checked images around a 0.5 confidence threshold."""
    return [
        make_image("img-a", [0.9, 0.8, 0.7], 3),
        make_image("img-b", [0.95, 0.6, 0.2], 2),
        make_image("img-c", [0.4, 0.3, 0.1], 2),
        make_image("img-d", [], 0),
        make_image("img-e", [0.55, 0.45, 0.35, 0.25], 4),
        make_image("img-f", [0.85], 0),
    ]


@pytest.fixture
def sample_dataset_lines():
    """JSON Lines content for a small two-season dataset."""
    return [
        '{"image_id": "k19-1", "season": "K19", "boxes": [{"score": 0.9, "x": 1, "y": 2}], "gt_count": 1}',
        '{"image_id": "k19-2", "season": "K19", "boxes": [{"score": 0.2}, {"score": 0.7}], "gt_count": 1}',
        '',
        '{"image_id": "k20-1", "season": "K20", "boxes": [], "gt_count": 0}',
        '{"image_id": "s20-1", "season": "S20", "boxes": [{"score": 0.5}], "gt_count": 2}',
    ]


@pytest.fixture
def sample_dataset_file(tmp_path, sample_dataset_lines) -> Path:
    """Sample dataset written to a temporary file."""
    path = tmp_path / "dataset.jsonl"
    path.write_text("\n".join(sample_dataset_lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def fast_bootstrap() -> BootstrapConfig:
    """Bootstrap settings small enough for unit tests."""
    return BootstrapConfig(resamples=TestConfig.FAST_RESAMPLES, alpha=0.05, seed=7)


@pytest.fixture(scope="session")
def scenario_images():
    """Generate a shipped scenario once per session, keyed by name."""
    cache = {}

    def load(name: str) -> List[ImageRecord]:
        if name not in cache:
            cache[name] = generate_synthetic(load_generator_config(SCENARIO_DIR / f"{name}.json"))
        return cache[name]

    return load


@pytest.fixture
def scenario_file(tmp_path, scenario_images):
    """Write a shipped scenario to a dataset file and return its path."""

    def write(name: str) -> Path:
        return write_dataset(scenario_images(name), tmp_path / f"{name}.jsonl")

    return write


@pytest.fixture(autouse=True)
def setup_test_environment():
    """Set up test environment variables."""
    original_env = os.environ.copy()

    os.environ["TESTING"] = "true"
    os.environ["REJECT_GATE_THREADS"] = "1"

    yield

    # Restore original environment
    os.environ.clear()
    os.environ.update(original_env)


class TestConfig:
    """Test configuration constants."""

    # Test timeouts
    UNIT_TEST_TIMEOUT = 5
    INTEGRATION_TEST_TIMEOUT = 120
    LOAD_TEST_TIMEOUT = 600

    # Bootstrap sizes
    FAST_RESAMPLES = 200
    FULL_RESAMPLES = 1000

    # Scenario names
    SCENARIOS = ["clean_noisy", "u_shape", "drift", "heavy_tail"]

    # Acceptance limits
    SWEEP_SECONDS = 60
    CALIBRATE_SECONDS = 120
