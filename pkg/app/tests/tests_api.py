import pytest
from fastapi.testclient import TestClient

from app.core.config import Settings, settings
from app.main import app

client = TestClient(app)
PREFIX = settings.API_PREFIX

RESUME_INSTANCE = {
    "time_model": "continuous",
    "setting": "broadcast",
    "pages": [{"id": "a", "length": "3"}, {"id": "b", "length": "1"}],
    "requests": [
        {"page": "a", "arrival": "0", "deadline": "10"},
        {"page": "b", "arrival": "1", "deadline": "2"},
    ],
}

PLAIN_INSTANCE = {
    "time_model": "slotted",
    "setting": "broadcast",
    "pages": [{"id": "a", "length": "1"}, {"id": "b", "length": "1"}],
    "requests": [
        {"page": "a", "arrival": "0"},
        {"page": "b", "arrival": "0"},
        {"page": "a", "arrival": "1"},
    ],
}


def test_health():
    response = client.get(f"{PREFIX}/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"
    assert "X-Process-Time-Ms" in response.headers


def test_root_lists_endpoints():
    assert client.get("/").json()["endpoints"]["simulate"] == f"{PREFIX}/simulate"


def test_simulate_preemptive():
    response = client.post(f"{PREFIX}/simulate", json={
        "instance": RESUME_INSTANCE, "policy": "ssfw", "c": "2", "mode": "preemptive",
    })
    assert response.status_code == 200
    body = response.json()

    assert body["summary"]["max_delay_factor"] == "20/19"
    assert body["stats"]["preemptions"] == 1
    assert body["stats"]["resumes"] == 1
    assert [a["page"] for a in body["transcript"]["attempts"]] == ["a", "b"]


def test_metrics_endpoint():
    run = client.post(f"{PREFIX}/simulate", json={"instance": PLAIN_INSTANCE, "policy": "fifo"}).json()
    response = client.post(f"{PREFIX}/metrics", json={
        "instance": PLAIN_INSTANCE, "transcript": run["transcript"], "metric": "max_response",
    })
    assert response.status_code == 200
    assert response.json() == {"metric": "max_response", "value": "2"}


def test_oracle_endpoint():
    response = client.post(f"{PREFIX}/oracle", json={"instance": PLAIN_INSTANCE, "metric": "max_response"})
    assert response.status_code == 200
    assert response.json()["objective"] == "2"


def test_oracle_cap_is_413():
    response = client.post(f"{PREFIX}/oracle", json={"instance": PLAIN_INSTANCE, "metric": "max_response", "cap": 2})
    assert response.status_code == 413
    assert response.json()["error"] == "ORACLE_CAP_EXCEEDED"


@pytest.mark.parametrize("payload,status,code", [
    ({"instance": PLAIN_INSTANCE, "policy": "ssfw", "c": "2"}, 422, "POLICY_MISMATCH"),
    ({"instance": PLAIN_INSTANCE, "policy": "ssfw"}, 400, "MISSING_PARAMETER"),
    ({"instance": {**PLAIN_INSTANCE, "pages": []}, "policy": "fifo"}, 400, "UNKNOWN_PAGE"),
])
def test_simulate_errors(payload, status, code):
    response = client.post(f"{PREFIX}/simulate", json=payload)
    assert response.status_code == status
    assert response.json()["error"] == code


def test_lf_adversary_endpoint():
    response = client.get(f"{PREFIX}/adversary/lf", params={"s": 1, "c": 2})
    assert response.status_code == 200
    body = response.json()

    assert body["plan"]["k"] == 3
    assert body["plan"]["A"] == ["-23", "-11", "-5", "-2"]
    assert len(body["instance"]["requests"]) == 4


def test_lf_adversary_k_too_small():
    response = client.get(f"{PREFIX}/adversary/lf", params={"s": 1, "c": 2, "k": 1})
    assert response.status_code == 400
    assert response.json()["error"] == "K_TOO_SMALL"


def test_instance_error_names_the_entity():
    response = client.post(f"{PREFIX}/simulate", json={"instance": {**PLAIN_INSTANCE, "pages": []}, "policy": "fifo"})
    body = response.json()

    assert body["entity"] == "a#0"
    assert "timestamp" in body


def test_docs_hidden_in_production():
    assert Settings(ENVIRONMENT="production").is_production
    assert not Settings(ENVIRONMENT="development").is_production
    assert client.get("/").json()["documentation"]["swagger"] == app.docs_url
