"""HTTP facade: routes, payload schemas, and exit-code passthrough."""

import warnings

import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from duophase import __version__
from duophase.experiments import OPERATIONS
from duophase.service import create_app

F1_PASS = "[density]\np = 2\nq = 2.5\n"
F1_FAIL = "[density]\np = 2\nq = 3.5\n"


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


class TestHealth:
    def test_healthz_reports_version_and_operations(self, client):
        resp = client.get("/healthz")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok"
        assert body["version"] == __version__
        assert body["operations"] == sorted(OPERATIONS)


class TestRecipes:
    def test_listing_has_names_and_summaries(self, client):
        resp = client.get("/recipes")
        assert resp.status_code == 200
        rows = resp.json()
        names = {row["name"] for row in rows}
        assert {"zhikov-step", "example1", "example2", "lavrentiev-dirichlet"} <= names
        assert all(row["summary"] for row in rows)

    def test_detail_returns_the_config_text(self, client):
        resp = client.get("/recipes/example1")
        assert resp.status_code == 200
        body = resp.json()
        assert body["name"] == "example1"
        assert "[density]" in body["content"]

    def test_unknown_recipe_is_404_and_lists_the_rest(self, client):
        resp = client.get("/recipes/nope")
        assert resp.status_code == 404
        assert "zhikov-step" in resp.json()["detail"]


class TestRun:
    def test_unknown_operation_is_404(self, client):
        resp = client.post("/run/bogus", json={"config": F1_PASS})
        assert resp.status_code == 404

    def test_passing_run_returns_exit_zero_in_the_body(self, client):
        resp = client.post("/run/check-f1", json={"config": F1_PASS})
        assert resp.status_code == 200
        body = resp.json()
        assert body["exit_code"] == 0
        assert body["verdict"] == "pass-on-samples"
        assert {f["name"] for f in body["files"]} == {"report.txt", "report.csv"}
        assert body["config_digest"]

    def test_failing_run_still_returns_200(self, client):
        resp = client.post("/run/check-f1", json={"config": F1_FAIL})
        assert resp.status_code == 200
        assert resp.json()["exit_code"] == 1

    def test_usage_error_rides_in_the_body_too(self, client):
        resp = client.post("/run/check-f1", json={"config": "p = 2\n"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["exit_code"] == 2
        assert "line 1" in body["summary"]
        assert body["files"] == []

    def test_seed_field_is_respected(self, client):
        resp = client.post("/run/check-f1", json={"config": F1_PASS, "seed": 11})
        assert resp.json()["seed"] == 11

    def test_negative_seed_is_rejected_by_validation(self, client):
        resp = client.post("/run/check-f1", json={"config": F1_PASS, "seed": -1})
        assert resp.status_code == 422

    def test_missing_config_is_rejected_by_validation(self, client):
        resp = client.post("/run/check-f1", json={})
        assert resp.status_code == 422
