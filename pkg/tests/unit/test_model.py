import numpy as np
import pytest

from rejectgate.errors import DataValidationError
from rejectgate.parallel import map_ordered
from rejectgate.model import (
    ImageRecord,
    LevelKind,
    RejectionLevel,
    SeasonId,
    absolute_error,
    format_threshold,
    gate,
    predicted_count,
    survivor_median,
    surviving_scores,
)
from tests.conftest import make_image


class TestSeasonId:
    """Unit tests for season labels and their ordering."""

    def test_parse_round_trips_label(self):
        """Test that parsing keeps the label."""
        season = SeasonId.parse("K19")
        assert season.kind == "K"
        assert season.year == 19
        assert season.label == "K19"
        assert str(SeasonId.parse("S05")) == "S05"

    def test_summer_precedes_kharif_within_a_year(self):
        """Test chronological order of season types."""
        ordered = sorted(SeasonId.parse(label) for label in ["K20", "S21", "S20", "K19"])
        assert [season.label for season in ordered] == ["K19", "S20", "K20", "S21"]

    @pytest.mark.parametrize("label", ["", "X19", "K2019", "k19", "K1"])
    def test_invalid_labels_rejected(self, label):
        """Test malformed season labels."""
        with pytest.raises(DataValidationError):
            SeasonId.parse(label)


class TestImageRecord:
    """Unit tests for image record validation."""

    def test_score_outside_unit_interval(self):
        """Test that scores must lie in [0, 1]."""
        with pytest.raises(DataValidationError):
            make_image("bad", [0.5, 1.5], 1)

    @pytest.mark.parametrize("gt_count", [-1, True, 1.5])
    def test_gt_count_must_be_non_negative_int(self, gt_count):
        """Test ground-truth count validation."""
        with pytest.raises(DataValidationError):
            ImageRecord(image_id="bad", season=SeasonId.parse("K19"), scores=(), gt_count=gt_count)

    def test_geometry_excluded_from_equality(self):
        """Test that box geometry does not affect equality."""
        plain = make_image("same", [0.4], 1)
        with_geometry = ImageRecord(
            image_id="same", season=SeasonId.parse("K19"), scores=(0.4,), gt_count=1, geometry=({"x": 3},)
        )
        assert plain == with_geometry


class TestCounting:
    """Unit tests for thresholded counts and absolute errors."""

    def test_threshold_is_inclusive(self):
        """Test that a box scoring exactly t survives."""
        image = make_image("edge", [0.5, 0.49999], 1)
        assert predicted_count(image, 0.5) == 1
        assert surviving_scores(image, 0.5) == [0.5]

    def test_extreme_thresholds(self, sample_images):
        """Test t=0 keeps every box and t=1 keeps only perfect scores."""
        image = sample_images[0]
        assert predicted_count(image, 0.0) == len(image.scores)
        assert predicted_count(image, 1.0) == 0
        assert predicted_count(make_image("perfect", [1.0, 0.2], 1), 1.0) == 1

    def test_absolute_errors(self, sample_images):
        """Test AE for every sample image at t=0.5."""
        assert [absolute_error(image, 0.5) for image in sample_images] == [0, 0, 2, 0, 3, 1]

    def test_unsorted_scores_are_counted(self):
        """Test that input order of scores does not matter."""
        image = make_image("shuffled", [0.2, 0.9, 0.6, 0.1], 2)
        assert predicted_count(image, 0.5) == 2
        assert surviving_scores(image, 0.5) == [0.6, 0.9]


class TestSurvivorMedian:
    """Unit tests for the median of surviving scores."""

    def test_even_count_averages_middle_pair(self, sample_images):
        """Test the sample median for an even number of survivors."""
        assert survivor_median(sample_images[1], 0.5) == pytest.approx(0.775)

    def test_odd_count(self, sample_images):
        """Test the sample median for an odd number of survivors."""
        assert survivor_median(sample_images[0], 0.5) == pytest.approx(0.8)

    def test_no_survivors_uses_empty_median(self, sample_images):
        """Test the configurable median of images without survivors."""
        assert survivor_median(sample_images[2], 0.5) == 0.0
        assert survivor_median(sample_images[3], 0.5, empty_median=1.0) == 1.0


class TestRejectionLevel:
    """Unit tests for rejection levels and the gate."""

    @pytest.mark.parametrize(
        "value,expected", [(0.17, "0.17"), (0.5, "0.50"), (0.125, "0.125"), (0.0, "0.00"), (1.0, "1.00")]
    )
    def test_format_threshold(self, value, expected):
        """Test threshold rendering."""
        assert format_threshold(value) == expected

    def test_notation(self):
        """Test tuple notation with and without a kind."""
        assert RejectionLevel(0.17, 0.22, LevelKind.GLOBAL).notation == "[0.17, 0.22]_g"
        assert RejectionLevel(0.3, 0.01, LevelKind.RELATIVE).notation == "[0.30, 0.01]_r"
        assert RejectionLevel(0.3, 0.5).notation == "[0.30, 0.50]"

    def test_parse(self):
        """Test parsing command-line level literals."""
        assert RejectionLevel.parse("0.3,0.01,r") == RejectionLevel(0.3, 0.01, LevelKind.RELATIVE)
        assert RejectionLevel.parse(" 0.2 , 0.4 ") == RejectionLevel(0.2, 0.4)

    @pytest.mark.parametrize("literal", ["0.3", "0.1,0.2,0.3,0.4", "a,b", "0.1,0.2,x", "1.2,0.1"])
    def test_parse_rejects_malformed(self, literal):
        """Test malformed level literals."""
        with pytest.raises(ValueError):
            RejectionLevel.parse(literal)

    def test_gate_accepts_when_median_reaches_cutoff(self, sample_images):
        """Test gate decisions against a fixed level."""
        level = RejectionLevel(0.5, 0.6)
        decisions = [gate(image, level).accepted for image in sample_images]
        assert decisions == [True, True, False, False, False, True]

        decision = gate(sample_images[4], level)
        assert decision.surviving_count == 1
        assert decision.survivor_median == pytest.approx(0.55)

    def test_gate_cutoff_is_inclusive(self):
        """Test that median equal to the cutoff is accepted."""
        image = make_image("edge", [0.6], 1)
        assert gate(image, RejectionLevel(0.5, 0.6)).accepted

    def test_empty_median_one_accepts_empty_images(self, sample_images):
        """Test the alternative median for images without survivors."""
        level = RejectionLevel(0.5, 0.6)
        assert gate(sample_images[3], level, empty_median=1.0).accepted


def random_image(rng, index):
    """An image with up to 14 random scores and a random count."""
    scores = rng.uniform(0.0, 1.0, size=rng.integers(0, 15)).round(3)
    return make_image(f"prop-{index:04d}", scores.tolist(), int(rng.integers(0, 12)))


class TestModelProperties:
    """Property tests over random images and thresholds."""

    def test_counting_is_monotone_in_threshold(self):
        """Test that a higher threshold never keeps more boxes."""
        rng = np.random.default_rng(31)
        for index in range(300):
            image = random_image(rng, index)
            t1, t2 = sorted(rng.uniform(0.0, 1.0, size=2))
            assert predicted_count(image, t1) >= predicted_count(image, t2)
            assert predicted_count(image, t1) == len(surviving_scores(image, t1))

    def test_gate_is_monotone_in_median_cutoff(self):
        """Test that rejection at a cutoff persists at every larger cutoff."""
        rng = np.random.default_rng(32)
        cutoffs = [round(0.05 * i, 2) for i in range(21)]
        for index in range(200):
            image = random_image(rng, index)
            t = float(rng.uniform(0.0, 1.0))
            accepted = [gate(image, RejectionLevel(t, m)).accepted for m in cutoffs]
            # Once rejected, never accepted again.
            assert accepted == sorted(accepted, reverse=True)

    @pytest.mark.parametrize("empty_median", [0.0, 1.0])
    def test_zero_cutoff_accepts_everything(self, empty_median):
        """Test that a zero median cutoff accepts every image."""
        rng = np.random.default_rng(33)
        for index in range(200):
            image = random_image(rng, index)
            level = RejectionLevel(float(rng.uniform(0.0, 1.0)), 0.0)
            assert gate(image, level, empty_median).accepted

    def test_survivor_median_within_survivor_range(self):
        """Test that the median lies between the smallest and largest survivor."""
        rng = np.random.default_rng(34)
        for index in range(300):
            image = random_image(rng, index)
            t = float(rng.uniform(0.0, 1.0))
            survivors = surviving_scores(image, t)
            if survivors:
                assert min(survivors) <= survivor_median(image, t) <= max(survivors)

    def test_single_survivor_is_its_own_median(self):
        """Test that one surviving score is the median."""
        rng = np.random.default_rng(35)
        for s in rng.uniform(0.0, 1.0, size=50).round(4):
            image = make_image("single", [float(s) / 2, float(s)], 1)
            assert survivor_median(image, float(s)) == float(s)

    def test_gate_identical_across_threads(self):
        """Test that concurrent gate calls reproduce sequential decisions."""
        rng = np.random.default_rng(36)
        images = [random_image(rng, index) for index in range(100)]
        level = RejectionLevel(0.3, 0.5)
        sequential = [gate(image, level) for image in images]
        assert map_ordered(lambda image: gate(image, level), images, 4) == sequential


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
