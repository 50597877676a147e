"""
Unit tests for feature-table and sequence-table assembly.
"""
import numpy as np
import pytest

from app.core.data.assembly import assemble_feature_table, assemble_sequences, remaining_targets
from app.core.data.types import WindowMode, WindowSpec
from app.core.errors import DataIntegrityError, InsufficientDataError, InvalidInputError
from app.core.features.catalog import DEFAULT_CATALOG


class TestRemainingTargets:
    """Test suite for remaining_targets()."""

    @pytest.mark.unit
    def test_estimate_is_mean_of_earlier_rtts(self, make_tasks):
        """
        Test three consecutive tasks with RTTs 100, 200 and 300 ms.

        Expected behavior:
        - The first task has no history and is dropped
        - The second uses estimate 100: target = 2200 - (2000 + 50) = 150
        - The third uses estimate 150: target = 3300 - (3000 + 75) = 225
        """
        # Arrange
        tasks = make_tasks([(1000, 100), (2000, 200), (3000, 300)])

        # Act
        result = remaining_targets(tasks)

        # Assert
        assert result.dropped == (tasks[0].task_id,)
        assert result.estimates == {tasks[1].task_id: 100.0, tasks[2].task_id: 150.0}
        assert result.targets == {tasks[1].task_id: 150.0, tasks[2].task_id: 225.0}

    @pytest.mark.unit
    def test_estimate_ignores_tasks_still_running(self, make_tasks):
        """
        Test overlapping tasks: the first runs from 1000 to 1500 ms, the
        second starts at 1200 ms and ends at 1300 ms.

        Expected behavior:
        - The second task sees no completed task and is dropped
        - The third (t_start 2000) averages both RTTs: (500 + 100) / 2
        """
        # Arrange
        tasks = make_tasks([(1000, 500), (1200, 100), (2000, 400)])

        # Act
        result = remaining_targets(tasks)

        # Assert
        assert result.dropped == (tasks[0].task_id, tasks[1].task_id)
        assert result.estimates == {tasks[2].task_id: 300.0}
        assert result.targets == {tasks[2].task_id: 2400 - (2000 + 150.0)}

    @pytest.mark.unit
    def test_task_ending_at_start_counts_as_history(self, make_tasks):
        tasks = make_tasks([(1000, 200), (1200, 100)])

        result = remaining_targets(tasks)

        assert result.estimates == {tasks[1].task_id: 200.0}

    @pytest.mark.unit
    def test_supplied_estimate_wins(self, make_tasks):
        tasks = make_tasks([(1000, 100)])

        result = remaining_targets(tasks, {tasks[0].task_id: 40.0})

        assert result.dropped == ()
        assert result.targets[tasks[0].task_id] == 80.0


class TestAssembleFeatureTable:
    """Test suite for assemble_feature_table()."""

    @pytest.fixture
    def archive(self, make_archive):
        ramp = [i * 0.01 for i in range(100)]
        return make_archive({"cpu": ramp, "mem": [0.5] * 50 + [0.7] * 50})

    @pytest.mark.unit
    def test_columns_follow_metric_then_catalog_order(self, archive, make_tasks):
        """
        Test assembling two metrics for three tasks with a 1 s window.

        Expected behavior:
        - 2 x 30 columns, cpu block before mem block
        - The cpu mean of the task at 2 s averages samples 1000..1800 ms
        - Targets are the RTTs
        """
        # Arrange
        tasks = make_tasks([(2000, 100), (4000, 150), (6000, 200)])

        # Act
        table = assemble_feature_table(archive, tasks, WindowSpec(1.0))

        # Assert
        assert len(table.columns) == 2 * len(DEFAULT_CATALOG)
        assert table.columns[0] == "cpu::count"
        assert table.columns[len(DEFAULT_CATALOG)] == "mem::count"
        assert table.column("cpu::mean")[0] == pytest.approx(0.07)
        assert table.column("cpu::count").tolist() == [5.0, 5.0, 5.0]
        assert table.y.tolist() == [100.0, 150.0, 200.0]
        assert table.metrics == ["cpu", "mem"]

    @pytest.mark.unit
    def test_task_with_empty_window_is_dropped(self, archive, make_tasks):
        """
        Expected behavior:
        - A task submitted before the data starts is left out of the table
        """
        tasks = make_tasks([(-5000, 100), (2000, 100), (4000, 150)])

        table = assemble_feature_table(archive, tasks, WindowSpec(1.0), metrics=["cpu"])

        assert table.task_ids == (tasks[1].task_id, tasks[2].task_id)

    @pytest.mark.unit
    def test_every_window_empty_rejected(self, archive, make_tasks):
        tasks = make_tasks([(-5000, 100)])

        with pytest.raises(InsufficientDataError):
            assemble_feature_table(archive, tasks, WindowSpec(1.0))

    @pytest.mark.unit
    def test_explicit_targets_override_rtt(self, archive, make_tasks):
        tasks = make_tasks([(2000, 100), (4000, 150)])
        targets = {tasks[0].task_id: 7.0, tasks[1].task_id: 9.0}

        table = assemble_feature_table(archive, tasks, WindowSpec(1.0), metrics=["cpu"], targets=targets)

        assert table.y.tolist() == [7.0, 9.0]

    @pytest.mark.unit
    def test_constant_target_rejected(self, archive, make_tasks):
        """
        Test three tasks with the same 100 ms RTT.

        Expected behavior:
        - DataIntegrityError naming the constant target
        """
        tasks = make_tasks([(2000, 100), (4000, 100), (6000, 100)])

        with pytest.raises(DataIntegrityError, match="constant"):
            assemble_feature_table(archive, tasks, WindowSpec(1.0), metrics=["cpu"])


class TestAssembleSequences:
    """Test suite for assemble_sequences()."""

    @pytest.mark.unit
    def test_shape_is_tasks_by_steps_by_metrics(self, make_archive, make_tasks):
        archive = make_archive({"cpu": [0.1] * 100, "mem": [0.2] * 100})
        tasks = make_tasks([(2000, 100), (4000, 100), (6000, 100)])

        table = assemble_sequences(archive, tasks, WindowSpec(1.0), ["cpu", "mem"])

        assert table.X.shape == (3, 5, 2)
        assert np.all(table.X[:, :, 1] == 0.2)
        assert table.metrics == ("cpu", "mem")

    @pytest.mark.unit
    def test_only_pre_submission_windows(self, make_archive, make_tasks):
        archive = make_archive({"cpu": [0.1] * 100})
        tasks = make_tasks([(2000, 100)])

        with pytest.raises(InvalidInputError):
            assemble_sequences(archive, tasks, WindowSpec(1.0, WindowMode.FULL_TASK), ["cpu"])
