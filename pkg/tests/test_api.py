import pytest
from fastapi.testclient import TestClient

from vidnetsim.api.main import app
from vidnetsim.video.yuv import synthetic_sequence, write_yuv

from .conftest import PROFILE


@pytest.fixture
def client(monkeypatch):
    monkeypatch.setenv("VNSIM_PROFILE_DIR", str(PROFILE.parent))
    return TestClient(app)


def test_root_and_health(client):
    assert client.get("/").json()["message"] == "vidnetsim API"
    health = client.get("/health").json()
    assert health["status"] == "healthy"
    assert health["profiles"] >= 1


def test_profiles(client):
    assert "disaster_area" in client.get("/profiles").json()["profiles"]


def test_validate_accepts_a_profile(client):
    response = client.post("/config/validate", content=PROFILE.read_text())
    assert response.status_code == 200
    body = response.json()
    assert body["valid"] is True
    assert body["seed"] == 7
    assert body["nodes"]["wimax_ss"] == 20


def test_validate_rejects_unknown_keys(client):
    response = client.post("/config/validate", content="seed: 1\nvideoo:\n  width: 64\n")
    assert response.status_code == 422
    assert "videoo" in response.json()["detail"]


def test_run_speed_sweep(client, tmp_path, tiny_config_file):
    out = tmp_path / "report"
    response = client.post("/experiments/run", json={
        "config": str(tiny_config_file), "experiment": "speed", "out_dir": str(out), "jobs": 1,
    })
    assert response.status_code == 200
    body = response.json()
    assert body["runs"] == 2
    assert body["files"][0] == "summary.csv"
    assert body["first_violation"] is None
    assert (out / "summary.txt").read_text() == body["summary"]


def test_run_rejects_unknown_experiments(client, tiny_config_file):
    response = client.post("/experiments/run", json={"config": str(tiny_config_file), "experiment": "bogus"})
    assert response.status_code == 400


def test_score(client, tmp_path):
    clip = tmp_path / "clip.yuv"
    write_yuv(clip, synthetic_sequence(64, 48, 2))
    response = client.post("/score", json={"ref": str(clip), "rec": str(clip), "width": 64, "height": 48})
    assert response.status_code == 200
    assert response.json()["mean_y_psnr_db"] == 99.0
    assert response.json()["frames"] == 2


def test_score_missing_file(client, tmp_path):
    response = client.post("/score", json={"ref": str(tmp_path / "none.yuv"), "rec": str(tmp_path / "none.yuv"),
                                          "width": 64, "height": 48})
    assert response.status_code == 404
