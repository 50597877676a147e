"""
Unit tests for scenario and record schemas.
"""
import json

import pytest
from pydantic import ValidationError

from app.core.errors import ConfigurationError
from app.schemas.records import MetricLine, TaskLine
from app.schemas.scenario import load_scenario, parse_scenario
from tests.conftest import drift_scenario_data, oracle_scenario_data


class TestParseScenario:
    """Test suite for parse_scenario()."""

    @pytest.mark.unit
    def test_valid_scenario(self):
        scenario = parse_scenario(drift_scenario_data())

        assert [n.node_id for n in scenario.nodes] == ["edge-1"]
        assert scenario.apps_on("edge-1") == ["streamer", "tracker", "uploader"]
        assert scenario.effective_warmup_s == scenario.lookback_s == 5.0
        assert scenario.confirm.alpha == 0.95

    @pytest.mark.unit
    def test_unknown_app_in_placement(self):
        data = oracle_scenario_data()
        data["placements"].append({"app_id": "classifier", "node_id": "edge-1"})

        with pytest.raises(ConfigurationError, match="classifier"):
            parse_scenario(data)

    @pytest.mark.unit
    def test_stage_activating_unknown_app(self):
        data = oracle_scenario_data()
        data["stages"] = [{"active": ["detector", "ghost"]}]

        with pytest.raises(ConfigurationError, match="ghost"):
            parse_scenario(data)

    @pytest.mark.unit
    def test_demand_on_missing_resource(self):
        """
        Expected behavior:
        - An app demanding a resource its node lacks is rejected
        """
        data = oracle_scenario_data()
        data["apps"][0]["demand"] = {"gpu": 0.5}

        with pytest.raises(ConfigurationError, match="gpu"):
            parse_scenario(data)

    @pytest.mark.unit
    def test_error_names_field_path(self):
        data = oracle_scenario_data()
        data["nodes"][0]["capacities"] = {"cpu": 0.0}

        with pytest.raises(ConfigurationError) as exc_info:
            parse_scenario(data)

        assert exc_info.value.field_path == "nodes.0.capacities"

    @pytest.mark.unit
    def test_unknown_key_rejected(self):
        data = oracle_scenario_data()
        data["speedup"] = 2

        with pytest.raises(ConfigurationError, match="speedup"):
            parse_scenario(data)


class TestLoadScenario:
    """Test suite for load_scenario()."""

    @pytest.mark.unit
    def test_json_and_toml_agree(self, tmp_path):
        json_path = tmp_path / "scenario.json"
        json_path.write_text(json.dumps(oracle_scenario_data(seed=4)), encoding="utf-8")
        toml_path = tmp_path / "scenario.toml"
        toml_path.write_text(
            "\n".join(
                [
                    "seed = 4",
                    "decoy_metrics = 0",
                    "[[nodes]]",
                    'node_id = "edge-1"',
                    "background_period_s = 1.0",
                    "capacities = { cpu = 1.0 }",
                    "background = { cpu = [0.0, 0.2, 0.4, 0.6] }",
                    "[[apps]]",
                    'app_id = "detector"',
                    "base_service_ms = 125.0",
                    "t_max_s = 0.5",
                    "sensitivity = { cpu = 1.0 }",
                    "noise_sigma_log = 0.0",
                    "[[placements]]",
                    'app_id = "detector"',
                    'node_id = "edge-1"',
                    "[[stages]]",
                    'active = ["detector"]',
                    "tasks = 150",
                ]
            ),
            encoding="utf-8",
        )

        assert load_scenario(json_path) == load_scenario(toml_path)

    @pytest.mark.unit
    def test_unsupported_suffix(self, tmp_path):
        path = tmp_path / "scenario.yaml"
        path.write_text("seed: 1", encoding="utf-8")

        with pytest.raises(ConfigurationError, match="unsupported"):
            load_scenario(path)

    @pytest.mark.unit
    def test_syntax_error(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text("{", encoding="utf-8")

        with pytest.raises(ConfigurationError, match="cannot parse"):
            load_scenario(path)

    @pytest.mark.unit
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            load_scenario(tmp_path / "absent.toml")


class TestRecordLines:
    """Test suite for the JSON Lines record schemas."""

    @pytest.mark.unit
    def test_metric_line_lengths_must_match(self):
        with pytest.raises(ValidationError, match="ts_ms has 2 entries"):
            MetricLine(metric="cpu", node="edge-1", ts_ms=[0, 200], values=[0.1])

    @pytest.mark.unit
    def test_metric_line_blank_name(self):
        with pytest.raises(ValidationError):
            MetricLine(metric=" ", node="edge-1", ts_ms=[], values=[])

    @pytest.mark.unit
    def test_task_line_end_after_start(self):
        with pytest.raises(ValidationError, match="must be greater"):
            TaskLine(task_id="a", app="detector", node="edge-1", t_start_ms=100, t_end_ms=50)
