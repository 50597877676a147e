"""
Integration tests for GET /api/v1/query_range of the mock monitoring server.
"""
import pytest
from fastapi.testclient import TestClient

from app.main import create_app


class TestQueryRangeEndpoint:
    """Integration tests for the range-query endpoint."""

    @pytest.fixture
    def client(self, make_archive):
        """Test client over a two-metric archive sampled every 200 ms."""
        archive = make_archive({"cpu": [0.1, 0.2, 0.3, 0.4, 0.5], "net": [1.0, 2.0, 3.0, 4.0, 5.0]})
        return TestClient(create_app(archive))

    @pytest.mark.integration
    def test_health(self, client):
        response = client.get("/health")

        assert response.status_code == 200
        assert response.json() == {"status": "healthy", "version": "0.1.0", "series": 2}

    @pytest.mark.integration
    def test_range_is_inclusive(self, client):
        """
        Test a range from 0.2 s to 0.6 s.

        Expected behavior:
        - Matrix envelope with one series
        - Samples at both boundaries are included
        - Values are strings, timestamps are seconds
        """
        # Act
        response = client.get(
            "/api/v1/query_range", params={"query": "cpu", "start": "0.2", "end": "0.6", "step": "0.2"}
        )

        # Assert
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "success"
        assert body["data"]["resultType"] == "matrix"
        [series] = body["data"]["result"]
        assert series["metric"] == {"__name__": "cpu", "node": "edge-1"}
        assert series["values"] == [[0.2, "0.2"], [0.4, "0.3"], [0.6, "0.4"]]

    @pytest.mark.integration
    def test_label_matchers(self, client):
        response = client.get(
            "/api/v1/query_range",
            params={"query": '{node="edge-1"}', "start": "0", "end": "0.8", "step": "0.2"},
        )

        names = sorted(s["metric"]["__name__"] for s in response.json()["data"]["result"])
        assert names == ["cpu", "net"]

    @pytest.mark.integration
    def test_unmatched_node_gives_empty_result(self, client):
        response = client.get(
            "/api/v1/query_range",
            params={"query": 'cpu{node="edge-9"}', "start": "0", "end": "0.8", "step": "0.2"},
        )

        assert response.status_code == 200
        assert response.json()["data"]["result"] == []

    @pytest.mark.integration
    @pytest.mark.parametrize(
        "params, message",
        [
            ({"query": "cpu", "start": "0", "end": "0.8", "step": "1"}, "scrape interval"),
            ({"query": "cpu", "start": "0.8", "end": "0", "step": "0.2"}, "before start"),
            ({"query": 'cpu{node=~"edge.*"}', "start": "0", "end": "0.8", "step": "0.2"}, "matcher"),
        ],
    )
    def test_bad_requests_use_error_envelope(self, client, params, message):
        response = client.get("/api/v1/query_range", params=params)

        assert response.status_code == 400
        body = response.json()
        assert body["status"] == "error"
        assert body["errorType"] == "bad_data"
        assert message in body["error"]

    @pytest.mark.integration
    def test_no_archive_loaded(self):
        client = TestClient(create_app())

        response = client.get("/api/v1/query_range", params={"query": "cpu", "start": "0", "end": "1", "step": "0.2"})

        assert response.status_code == 503
