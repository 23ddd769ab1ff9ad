import pytest
from fastapi.testclient import TestClient

from api.index import app
from services.power_service import synthesize_trace


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def test_health(client):
    assert client.get("/api/v1/health").json() == {"status": "ok"}


def test_variant_lookup(client):
    body = client.get("/api/v1/variants/xxs").json()
    assert body["channels"] == [36, 72, 144, 288]
    assert client.get("/api/v1/variants/").json() == ["s", "xs", "xxs"]


def test_unknown_variant_is_404(client):
    response = client.get("/api/v1/variants/huge")
    assert response.status_code == 404
    assert "unknown variant" in response.json()["detail"]


def test_variant_cost(client):
    body = client.get("/api/v1/variants/xxs/cost", params={"input_size": 224}).json()
    assert body["total_params"] == 4_058_056
    assert body["total_macs"] == 531_223_776


def test_complexity(client):
    body = client.get("/api/v1/complexity", params={"h": 8, "w": 8, "c": 16, "k": 3, "r": 2}).json()
    assert body == {"local": 9216, "attention": 4096, "propagation": 4096}


def test_efficiency_rank(client):
    entries = [
        {"name": "a", "top1": 73.3, "energy_mj": 63.0},
        {"name": "b", "top1": 72.0, "energy_mj": 85.7},
    ]
    body = client.post("/api/v1/efficiency/rank", json={"entries": entries}).json()
    assert [e["name"] for e in body] == ["a", "b"]
    assert body[0]["pareto_optimal"] and not body[1]["pareto_optimal"]
    assert body[0]["efficiency"] == pytest.approx(1.164, abs=0.002)


def test_efficiency_rank_rejects_zero_energy(client):
    response = client.post("/api/v1/efficiency/rank", json={"entries": [{"name": "a", "top1": 1, "energy_mj": 0}]})
    assert response.status_code == 422


def test_power_analyze(client):
    trace, truth = synthesize_trace(count=5)
    samples = [[float(t), float(p)] for t, p in zip(trace.timestamps, trace.power)]
    body = client.post("/api/v1/power/analyze", json={"samples": samples, "expected": 5, "top1": 70.0}).json()
    assert body["count"] == 5
    assert body["energy_mean_mj"] == pytest.approx(truth.energy_mj, rel=1e-6)
    assert body["efficiency"] == pytest.approx(70.0 / truth.energy_mj, rel=1e-6)


def test_power_detection_failure_is_422(client):
    trace, _ = synthesize_trace(count=4)
    samples = [[float(t), float(p)] for t, p in zip(trace.timestamps, trace.power)]
    response = client.post("/api/v1/power/analyze", json={"samples": samples, "expected": 5})
    assert response.status_code == 422
    assert "detected 4" in response.json()["detail"]


def test_bad_trace_is_400(client):
    response = client.post("/api/v1/power/analyze", json={"samples": [[0.0, 1.0], [0.0, 1.0]], "expected": 1})
    assert response.status_code == 400
    assert "strictly increasing" in response.json()["detail"]
