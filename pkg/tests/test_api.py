"""HTTP 接口的测试"""
import importlib.util
import math
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from src.api.main import app
from src.core.behavior import FREE_NAMES
from src.core.boxes import pr_box
from src.services.quantum import behavior_from_model
from src.services.schemas import BehaviorPayload, QuantumModelPayload


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def _payload(b):
    return BehaviorPayload.from_behavior(b).model_dump()


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_rank(client):
    assert client.get("/rank").json() == {"rank": 8, "rows": 12, "columns": 16}


def test_box(client):
    response = client.get("/box/pr")
    assert response.status_code == 200
    data = response.json()
    assert data["blocks"][0] == {"pp": 0.5, "pm": 0.0, "mp": 0.0, "mm": 0.5}
    assert data["flat"]["p13"] == 0.0


def test_unknown_box(client):
    assert client.get("/box/nope").status_code == 400


def test_check_pr_box(client):
    response = client.post("/check", json={"behavior": _payload(pr_box(1))})
    assert response.status_code == 200
    data = response.json()
    assert data["validation"]["passed"]
    assert data["locality"]["local"] is False
    assert data["locality"]["witness"]["value"] == 4.0
    assert len(data["hardy"]) == 8


def test_check_accepts_flat_form(client):
    flat = {f"p{i}": 0.25 for i in range(1, 17)}
    response = client.post("/check", json={"behavior": flat})
    assert response.status_code == 200
    assert response.json()["locality"]["local"] is True


def test_check_reports_failures(client):
    flat = {f"p{i}": 0.3 for i in range(1, 17)}
    data = client.post("/check", json={"behavior": flat}).json()
    assert data["validation"]["passed"] is False
    assert data["locality"] is None


def test_check_rejects_bad_shape(client):
    response = client.post("/check", json={"behavior": {"blocks": []}})
    assert response.status_code == 422


def test_chsh(client):
    data = client.post("/chsh", json={"behavior": _payload(pr_box(2))}).json()
    assert data["delta"] == -4.0
    assert data["delta_abs"] == 4.0
    assert data["u_sum"] == 0.0


def test_hardy(client):
    response = client.post("/hardy", json={"behavior": _payload(pr_box(2)), "set": "8g"})
    assert response.status_code == 200
    (report,) = response.json()
    assert report["classification"] == "general-probabilistic-only"


def test_hardy_unknown_set(client):
    response = client.post("/hardy", json={"behavior": _payload(pr_box(2)), "set": "9z"})
    assert response.status_code == 400


def test_hardy_invalid_behavior(client):
    flat = {f"p{i}": 0.3 for i in range(1, 17)}
    assert client.post("/hardy", json={"behavior": flat}).status_code == 422


def test_solve(client):
    response = client.post("/solve", json={"free_set": dict.fromkeys(FREE_NAMES, 0.5)})
    assert response.status_code == 200
    data = response.json()
    assert set(data["dependent"].values()) == {0.0}
    assert data["feasibility"]["passed"]


def test_solve_out_of_range(client):
    values = dict.fromkeys(FREE_NAMES, 0.5)
    values["p9"] = -0.5
    assert client.post("/solve", json={"free_set": values}).status_code == 422


def test_optimize_product(client):
    response = client.post("/optimize/chsh", json={"restarts": 2, "seed": 1, "state_class": "product"})
    assert response.status_code == 200
    assert response.json()["objective"] == pytest.approx(2.0, abs=1e-6)


def test_optimize_maxent_chsh(client):
    response = client.post("/optimize/chsh", json={"restarts": 2, "state_class": "maximally_entangled"})
    assert response.json()["objective"] == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-6)


def test_optimize_unknown_kind(client):
    assert client.post("/optimize/bell", json={}).status_code == 400


def test_optimize_bad_state_class(client):
    assert client.post("/optimize/chsh", json={"restarts": 1, "state_class": "mixed"}).status_code == 422


def test_check_uses_request_tol(client):
    flat = {f"p{i}": 0.25 for i in range(1, 17)}
    flat["p1"] += 1e-6
    flat["p2"] -= 1e-6
    assert client.post("/check", json={"behavior": flat}).json()["validation"]["passed"] is False
    data = client.post("/check", json={"behavior": flat, "tol": 1e-4}).json()
    assert data["validation"]["passed"] is True
    assert len(data["hardy"]) == 8
    response = client.post("/hardy", json={"behavior": flat, "tol": 1e-4, "set": "8g"})
    assert response.status_code == 200


def test_hardy_without_premises_has_no_classification(client):
    (report,) = client.post("/hardy", json={"behavior": _payload(pr_box(1)), "set": "8g"}).json()
    assert report["premises_satisfied"] is False
    assert report["classification"] is None


def test_model(client, singlet_model):
    response = client.post("/model", json={"model": QuantumModelPayload.from_model(singlet_model).model_dump()})
    assert response.status_code == 200
    data = response.json()
    assert data["validation"]["passed"]
    expected = behavior_from_model(singlet_model)
    assert data["behavior"]["flat"]["p1"] == pytest.approx(expected["p1"], abs=1e-15)
    assert set(data["model"]["settings"]) == {"a1", "a2", "b1", "b2"}


def test_model_rejects_missing_direction(client, singlet_model):
    model = QuantumModelPayload.from_model(singlet_model).model_dump()
    del model["settings"]["b2"]
    assert client.post("/model", json={"model": model}).status_code == 422


def test_example_client_against_app(client, singlet_model):
    """客户端示例通过 httpx 驱动同一个应用"""
    path = Path(__file__).resolve().parents[1] / "scripts" / "example_client.py"
    spec = importlib.util.spec_from_file_location("example_client", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)

    eprb = module.EPRBClient()
    eprb.client = client
    assert eprb.rank()["rank"] == 8
    assert eprb.check(eprb.box("pr"))["locality"]["local"] is False
    (report,) = eprb.hardy(eprb.box("pr2"), "8g")
    assert report["witness_name"] == "p13"
    data = eprb.model(QuantumModelPayload.from_model(singlet_model).model_dump())
    assert data["validation"]["passed"]
