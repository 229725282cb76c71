import pytest
from fastapi.testclient import TestClient

from forbal.config import builtin_config_doc
from forbal.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(), raise_server_exceptions=False)


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_builtin_config_listing_and_fetch(client):
    assert client.get("/configs").json()["builtin"] == ["forbal2", "forbal5"]
    doc = client.get("/configs/forbal2").json()
    assert doc["links"]["11"]["length"] == 230.0


def test_balance_solve_endpoint(client):
    resp = client.post("/balance/solve", json={"config": "forbal2", "rings": True})
    assert resp.status_code == 200
    body = resp.json()
    assert body["residuals_after"]["max_abs"] < 1e-12
    assert set(body["counter_masses"]) == {"11", "21", "22"}
    assert body["ring_stacks"]["21"]["count_large"] >= 0


def test_balance_solve_with_inline_config(client):
    doc = builtin_config_doc("forbal2")
    doc["ee_payload_mass"] = 100.0  # grams, heavier payload
    resp = client.post("/balance/solve", json={"config": doc})
    assert resp.status_code == 200
    heavier = resp.json()["counter_masses"]["22"]
    base = client.post("/balance/solve", json={"config": "forbal2"}).json()
    assert heavier > base["counter_masses"]["22"]


def test_ik_endpoint_planar_and_spatial(client):
    resp = client.post("/ik/solve", json={"config": "forbal2", "target": [0.3, 0.25]})
    assert resp.status_code == 200
    body = resp.json()
    assert body["q11"] + body["q21"] > 0
    assert "q0" not in body
    resp = client.post("/ik/solve", json={
        "config": "forbal5", "target": [0.3, 0.1, 0.3, 0.0, 0.5]})
    assert resp.status_code == 200
    assert "q0" in resp.json()


def test_ik_unreachable_maps_to_422_with_code(client):
    resp = client.post("/ik/solve", json={"config": "forbal2", "target": [2.0, 2.0]})
    assert resp.status_code == 422
    assert resp.json()["code"] == "unreachable"


def test_ik_limit_violation_code(client):
    resp = client.post("/ik/solve", json={
        "config": "forbal2", "target": [0.05, 0.178], "enforce_limits": True})
    assert resp.status_code == 422
    assert resp.json()["code"] == "limit_violation"


def test_reachability_endpoint(client):
    resp = client.post("/ik/reachability", json={
        "config": "forbal2", "target": [0.3, 0.18]})
    assert resp.json()["status"] == "reachable"
    resp = client.post("/ik/reachability", json={
        "config": "forbal2", "target": [0.0, 0.178]})
    assert resp.json()["status"] == "unreachable"


def test_trajectory_export_endpoint(client):
    resp = client.get("/trajectory/F2-T4")
    assert resp.status_code == 200
    body = resp.json()
    assert body["csv"].splitlines()[0] == "t,x,z"
    assert len(body["csv"].splitlines()) == 42
    assert body["t_acc"] == 0.5
    resp = client.get("/trajectory/NOPE")
    assert resp.status_code == 422
    assert resp.json()["code"] == "unknown_id"


def test_simulate_endpoint(client):
    resp = client.post("/simulate", json={
        "config": "forbal2", "traj": "F2-T1", "configuration": "unbalanced",
        "dt": 0.05})
    assert resp.status_code == 200
    body = resp.json()
    lines = body["csv"].splitlines()
    assert lines[0] == "t,q11,q21,tau11,tau21,Fx,Fy,Fz,Mx,My,Mz"
    assert len(lines) == 82
    assert body["summary"]["tau11"]["mean_abs"] > 0


def test_simulate_accepts_waypoint_csv(client):
    wps = client.get("/trajectory/F2-T1").json()["csv"]
    resp = client.post("/simulate", json={
        "config": "forbal2", "traj": wps, "dt": 0.1})
    assert resp.status_code == 200
    assert resp.json()["traj_id"] == "custom"


def test_workspace_endpoint(client):
    resp = client.post("/workspace", json={"config": "forbal2"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["area"] == pytest.approx(0.081, rel=0.05)
    assert body["toroid_volume"] is None
    assert body["svg"].startswith("<svg")
    resp5 = client.post("/workspace", json={"config": "forbal5"})
    assert resp5.json()["toroid_volume"] is not None


def test_report_endpoint(client):
    resp = client.post("/report", json={
        "config": "forbal2", "traj": "F2-T1", "dt": 0.05})
    assert resp.status_code == 200
    body = resp.json()
    assert body["balanced_csv"] != body["unbalanced_csv"]
    assert body["metrics"]["mean_reduction_pct"]["tau11"] > 0
    assert body["plot_svg"].startswith("<svg")
