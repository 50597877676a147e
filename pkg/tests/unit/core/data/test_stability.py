"""
Unit tests for stable-metric removal.
"""
import pytest

from app.core.data.stability import drop_stable_metrics
from app.core.data.types import MetricArchive
from app.core.errors import InsufficientDataError


class TestDropStableMetrics:
    """Test suite for drop_stable_metrics()."""

    @pytest.mark.unit
    def test_constant_metric_removed(self, make_archive):
        """
        Test an archive with one varying and one constant metric.

        Expected behavior:
        - The constant metric is dropped
        - The varying metric is kept
        """
        # Arrange
        archive = make_archive({"cpu": [0.1, 0.5, 0.2, 0.9, 0.3, 0.4], "const": [1.0] * 6})

        # Act
        kept = drop_stable_metrics(archive, [("edge-1", 0, 1000)])

        # Assert
        assert kept.metrics_for_node("edge-1") == ["cpu"]

    @pytest.mark.unit
    def test_variation_outside_windows_does_not_count(self, make_archive):
        """
        Test a metric that only changes after the last window.

        Expected behavior:
        - It is stable over the windows and dropped
        """
        archive = make_archive({"late": [2.0] * 6 + [9.0] * 6, "cpu": list(range(12))})

        kept = drop_stable_metrics(archive, [("edge-1", 0, 1000)])

        assert kept.metrics_for_node("edge-1") == ["cpu"]

    @pytest.mark.unit
    def test_series_without_windowed_samples_kept(self, make_archive):
        archive = make_archive({"const": [1.0] * 6})

        kept = drop_stable_metrics(archive, [("edge-1", 50_000, 60_000)])

        assert kept.metrics_for_node("edge-1") == ["const"]

    @pytest.mark.unit
    def test_empty_archive_rejected(self):
        with pytest.raises(InsufficientDataError):
            drop_stable_metrics(MetricArchive(series={}), [])
