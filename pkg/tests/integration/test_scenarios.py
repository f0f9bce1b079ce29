import time

import pytest

from rejectgate.calibration import calibrate, evaluate_level, optimal_confidence, sweep_confidence, threshold_grid
from rejectgate.data import SplitKind, build_split, select_role
from rejectgate.model import SeasonId
from rejectgate.oracle import OracleMode, oracle_curve
from rejectgate.stats import BootstrapConfig
from tests.conftest import TestConfig

FULL_BOOTSTRAP = BootstrapConfig(resamples=TestConfig.FULL_RESAMPLES, alpha=0.05, seed=0)


@pytest.mark.integration
class TestCleanNoisyCalibration:
    """Calibration on a clean population mixed with a noisy one."""

    @pytest.fixture(scope="class")
    def report_and_images(self, scenario_images):
        images = scenario_images("clean_noisy")
        start = time.perf_counter()
        report = calibrate(images, cfg=FULL_BOOTSTRAP)
        elapsed = time.perf_counter() - start
        return report, images, elapsed

    def test_absolute_level_separates_populations(self, report_and_images):
        """Test that the absolute cutoff has an effect clearly above one half."""
        report, _, _ = report_and_images
        point = report.point_for(report.absolute)
        assert point.effect.point > 0.5
        assert point.effect.excludes(0.5)
        assert 0.0 < point.rejected_fraction < 1.0

    def test_relative_rejects_no_more_than_absolute(self, report_and_images):
        """Test the rejection ordering of the two levels."""
        report, _, _ = report_and_images
        assert report.point_for(report.relative).rejected_fraction <= report.point_for(report.absolute).rejected_fraction

    def test_accepted_mae_below_whole_set(self, report_and_images):
        """Test that gating lowers the MAE on the calibration data."""
        report, images, _ = report_and_images
        result = evaluate_level(images, report.absolute, FULL_BOOTSTRAP)
        assert result.mae.point < result.ungated_mae

        aware = oracle_curve(images, OracleMode.CONFIDENCE_AWARE, [0.0], threshold=report.conf_threshold)
        assert result.mae.point <= aware.points[0].mae

    def test_runtime(self, report_and_images):
        """Test that calibration of 1000 images stays interactive."""
        _, _, elapsed = report_and_images
        assert elapsed < 30


@pytest.mark.integration
class TestUShape:
    """MAE across thresholds with false positives low and missed detections high."""

    def test_interior_minimum(self, scenario_images):
        """Test that both extremes are clearly worse than the optimum."""
        images = scenario_images("u_shape")
        points = sweep_confidence(images, threshold_grid(), FULL_BOOTSTRAP)
        best = optimal_confidence(points)
        minimum = min(point.mae.point for point in points)

        assert 0.0 < best < 1.0
        assert points[0].mae.point >= 1.2 * minimum
        assert points[-1].mae.point >= 1.2 * minimum


@pytest.mark.integration
class TestSeasonalDrift:
    """Historic against present-aware calibration on a drifting season."""

    def calibrated_mae(self, images, kind):
        split = build_split(images, SeasonId.parse("K20"), kind, seed=0)
        val = select_role(images, split.assignment, "val")
        test = select_role(images, split.assignment, "test")
        report = calibrate(val, cfg=BootstrapConfig(resamples=200, seed=1))
        return report, evaluate_level(test, report.absolute, BootstrapConfig(resamples=200, seed=2)), test

    def test_present_aware_not_worse(self, scenario_images):
        """Test that adding current-season data never hurts on the shared test set."""
        images = scenario_images("drift")
        historic_report, historic, historic_test = self.calibrated_mae(images, SplitKind.HISTORIC)
        present_report, present, present_test = self.calibrated_mae(images, SplitKind.PRESENT_AWARE)

        assert [image.image_id for image in historic_test] == [image.image_id for image in present_test]
        assert present.mae.point <= historic.mae.point
        assert historic_report.conf_threshold > present_report.conf_threshold


@pytest.mark.integration
class TestHeavyTail:
    """Oracle rejection on a dataset with a small group of swarm images."""

    def test_ninety_percent_rejection(self, scenario_images):
        """Test that rejecting 90 percent leaves at most a tenth of the MAE."""
        images = scenario_images("heavy_tail")
        curve = oracle_curve(images, OracleMode.CONFIDENCE_AWARE, [0.0, 0.1, 0.9], threshold=0.5)
        maes = {point.fraction: point.mae for point in curve.points}
        assert maes[0.0] > 0
        assert maes[0.9] <= 0.1 * maes[0.0]
        assert maes[0.1] < maes[0.0]


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
