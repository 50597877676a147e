"""
Unit tests for the CLI argument handling and exit codes.
"""
import json
from unittest.mock import patch

import pytest

from app.cli import commands
from app.cli.main import build_parser, main
from app.core.errors import InfeasibleSelectionError, ParseError, SearchFailedError


class TestExitCodes:
    """Test suite for main()'s mapping of errors to exit codes."""

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "error, code",
        [
            (ParseError("bad line", 3), 3),
            (InfeasibleSelectionError("no candidate fits"), 4),
            (SearchFailedError("every trial diverged"), 1),
            (RuntimeError("boom"), 1),
            (KeyboardInterrupt(), 130),
        ],
    )
    def test_errors_map_to_codes(self, error, code):
        with patch.object(commands, "cmd_features_list", side_effect=error):
            assert main(["features", "list"]) == code

    @pytest.mark.unit
    def test_invalid_flag_value_is_a_configuration_error(self, tmp_path):
        """
        Test --theta outside (0, 1].

        Expected behavior:
        - Exit code 2 before any input is read
        - Nothing is written to --out
        """
        out = tmp_path / "out"

        code = main(["select", "--metrics", "m.jsonl", "--tasks", "t.jsonl", "--theta", "1.5", "--out", str(out)])

        assert code == 2
        assert not out.exists()

    @pytest.mark.unit
    def test_missing_input_file(self, tmp_path):
        code = main(
            [
                "correlate",
                "--metrics",
                str(tmp_path / "absent.jsonl"),
                "--tasks",
                str(tmp_path / "absent.jsonl"),
                "--app",
                "detector",
                "--node",
                "edge-1",
                "--out",
                str(tmp_path / "out"),
            ]
        )

        assert code == 2

    @pytest.mark.unit
    def test_unknown_subcommand_exits_through_argparse(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["train"])

        assert exc_info.value.code == 2


class TestFeaturesList:
    """Test suite for the features list command."""

    @pytest.mark.unit
    def test_prints_catalog_in_order(self, capsys):
        code = main(["features", "list"])

        lines = capsys.readouterr().out.splitlines()
        assert code == 0
        assert lines[0] == "catalog v1: 30 features"
        assert lines[1].split() == ["0", "count"]
        assert len(lines) == 31


class TestSweepConfigFromFlags:
    """Test suite for commands.sweep_config()."""

    @pytest.mark.unit
    def test_flags_override_defaults(self, monkeypatch):
        """
        Expected behavior:
        - Comma-separated flags become lists
        - Unset flags fall back to the settings
        """
        monkeypatch.setenv("PERFORACLE_TAU", "0.05")
        args = build_parser().parse_args(
            [
                "select",
                "--scenario",
                "s.toml",
                "--windows",
                "20,5",
                "--families",
                "lr, gbt",
                "--feature-counts",
                "1,3",
                "--mode",
                "mid_execution",
                "--out",
                "results",
            ]
        )

        config = commands.sweep_config(args)

        assert config.windows_s == [5.0, 20.0]
        assert [f.value for f in config.families] == ["lr", "gbt"]
        assert config.feature_counts == [1, 3]
        assert config.mode.value == "mid_execution"
        assert config.tau == 0.05
        assert config.theta == 0.9

    @pytest.mark.unit
    def test_run_config_echo(self):
        args = build_parser().parse_args(
            ["modes", "--scenario", "s.toml", "--app", "tracker", "--node", "edge-1", "--family", "fnn", "--out", "r"]
        )

        config = commands.run_config(args, commands.sweep_config(args))

        dumped = json.loads(config.model_dump_json())
        assert dumped["command"] == "modes"
        assert dumped["family"] == "fnn"
        assert dumped["sweep"]["windows_s"] == [5.0, 20.0, 60.0]
