"""
Unit tests for the sweep and run configuration schemas.
"""
import pytest
from pydantic import ValidationError

from app.core.data.types import WindowMode
from app.core.errors import ConfigurationError
from app.core.models.base import ModelFamily
from app.schemas.requests import DEFAULT_FAMILIES, RunConfig, SweepConfig, build_config


class TestSweepConfig:
    """Test suite for SweepConfig."""

    @pytest.mark.unit
    def test_defaults(self):
        """
        Expected behavior:
        - Windows 5, 20 and 60 s; six families without the baseline
        - tau 0.01, theta 0.9, pre-submission windows
        """
        config = SweepConfig()

        assert config.windows_s == [5.0, 20.0, 60.0]
        assert config.families == list(DEFAULT_FAMILIES)
        assert ModelFamily.MEAN not in config.families
        assert config.tau == 0.01
        assert config.theta == 0.9
        assert config.mode is WindowMode.PRE_SUBMISSION

    @pytest.mark.unit
    def test_windows_sorted_and_deduplicated(self):
        config = SweepConfig(windows_s=[60, 5, 5, 20])

        assert config.windows_s == [5.0, 20.0, 60.0]

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "overrides",
        [
            {"windows_s": []},
            {"windows_s": [0.0]},
            {"families": ["mean"]},
            {"families": ["lr", "lr"]},
            {"feature_counts": [0]},
            {"fractions": (0.5, 0.3, 0.3)},
            {"mode": "full_task"},
            {"tau": 0},
            {"unknown": 1},
        ],
    )
    def test_invalid_values_rejected(self, overrides):
        with pytest.raises(ValidationError):
            SweepConfig(**overrides)

    @pytest.mark.unit
    def test_feature_counts_from_step(self):
        """
        Expected behavior:
        - step, 2*step, ... below the metric count, then "all metrics"
        """
        config = SweepConfig(feature_step=10)

        assert config.feature_counts_for(35) == [10, 20, 30, 35]
        assert config.feature_counts_for(10) == [10]
        assert config.feature_counts_for(4) == [4]
        assert config.feature_counts_for(0) == []

    @pytest.mark.unit
    def test_explicit_feature_counts(self):
        config = SweepConfig(feature_counts=[5, 1, 5])

        assert config.feature_counts_for(3) == [1, 5]

    @pytest.mark.unit
    def test_sequential_families_use_their_windows(self):
        config = SweepConfig(windows_s=[5, 20], sequential_windows_s=[5])

        assert config.windows_for(ModelFamily.RNN) == [5.0]
        assert config.windows_for(ModelFamily.GBT) == [5.0, 20.0]


class TestBuildConfig:
    """Test suite for build_config()."""

    @pytest.mark.unit
    def test_valid_run_config(self):
        config = build_config(RunConfig, command="select", out="results", sweep={"tau": 0.05})

        assert config.sweep.tau == 0.05
        assert config.family is None

    @pytest.mark.unit
    def test_error_names_nested_field(self):
        """
        Expected behavior:
        - ConfigurationError carries the dotted path of the failing field
        """
        with pytest.raises(ConfigurationError) as exc_info:
            build_config(RunConfig, command="select", out="results", sweep={"theta": 1.5})

        assert exc_info.value.field_path == "sweep.theta"
        assert str(exc_info.value).startswith("sweep.theta: ")

    @pytest.mark.unit
    def test_unknown_family(self):
        with pytest.raises(ConfigurationError, match="family"):
            build_config(RunConfig, command="train", out="results", family="svm")
