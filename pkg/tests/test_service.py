from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from omulet.errors import TransportError
from omulet.service import create_app

from test_recommender import scripted_backend


@pytest.fixture()
def app_env(tmp_path, sample_catalog):
    log_path = tmp_path / "feedback.jsonl"
    app = create_app(sample_catalog, scripted_backend(), feedback_log=log_path)
    return TestClient(app), log_path


def test_recommend_returns_cards_and_intent(app_env):
    client, _ = app_env
    response = client.post("/api/recommend", json={"request": "what next after mm2", "k": 5})
    assert response.status_code == 200
    body = response.json()
    assert len(body["items"]) >= 1
    card = body["items"][0]
    assert set(card) == {"id", "name", "genre", "description", "rank"}
    assert body["intent"]["like"]["game_names"] == ["MM2"]
    assert 0.0 <= body["factual_fraction"] <= 1.0
    assert isinstance(body["latency_ms"], int)


def test_recommend_empty_body_is_400(app_env):
    client, _ = app_env
    assert client.post("/api/recommend", content=b"").status_code == 400
    assert client.post("/api/recommend", json={}).status_code == 400
    assert client.post("/api/recommend", json={"request": "   "}).status_code == 400


def test_recommend_oversized_body_is_400(app_env):
    client, _ = app_env
    big = {"request": "x" * 5000}
    assert client.post("/api/recommend", json=big).status_code == 400


def test_recommend_bad_k_and_mode(app_env):
    client, _ = app_env
    assert client.post("/api/recommend", json={"request": "x", "k": 0}).status_code == 400
    assert client.post("/api/recommend", json={"request": "x", "k": 21}).status_code == 400
    assert client.post("/api/recommend", json={"request": "x", "mode": "wat"}).status_code == 400


def test_recommend_backend_down_is_502(tmp_path, sample_catalog):
    class DownBackend:
        model_tag = "down"

        def complete(self, request):
            raise TransportError("unreachable")

    app = create_app(sample_catalog, DownBackend(), feedback_log=tmp_path / "f.jsonl")
    client = TestClient(app)
    assert client.post("/api/recommend", json={"request": "hello"}).status_code == 502


def test_recommend_timeout_is_504(tmp_path, sample_catalog):
    import time

    class SlowBackend:
        model_tag = "slow"

        def complete(self, request):
            time.sleep(0.3)
            return "1. DOORS"

    app = create_app(sample_catalog, SlowBackend(), feedback_log=tmp_path / "f.jsonl",
                     timeout_s=0.05)
    client = TestClient(app)
    assert client.post("/api/recommend", json={"request": "hello"}).status_code == 504


def test_feedback_appends_one_line(app_env):
    client, log_path = app_env
    response = client.post(
        "/api/feedback",
        json={"session_id": "s1", "request_text": "req", "item_id": "g_mm2", "verdict": "up"},
    )
    assert response.status_code == 200
    assert response.json() == {"accepted": True}
    lines = log_path.read_text().splitlines()
    assert len(lines) == 1
    event = json.loads(lines[0])
    assert event["verdict"] == "up"
    assert event["item_id"] == "g_mm2"
    assert isinstance(event["timestamp"], int)


def test_feedback_bad_verdict_is_400(app_env):
    client, log_path = app_env
    assert client.post("/api/feedback", json={"verdict": "maybe"}).status_code == 400
    assert not log_path.exists() or log_path.read_text() == ""


def test_feedback_log_order_matches_arrival(app_env):
    client, log_path = app_env
    client.post("/api/feedback", json={"session_id": "s", "verdict": "up", "item_id": "g_mm2"})
    client.post("/api/feedback", json={"session_id": "s", "verdict": "down", "item_id": "g_mm2"})
    events = [json.loads(line) for line in log_path.read_text().splitlines()]
    assert [e["verdict"] for e in events] == ["up", "down"]
    assert events[0]["timestamp"] <= events[1]["timestamp"]


def test_whole_response_feedback_has_null_item(app_env):
    client, log_path = app_env
    client.post("/api/feedback", json={"session_id": "s", "verdict": "down"})
    event = json.loads(log_path.read_text().splitlines()[0])
    assert event["item_id"] is None


def test_health(app_env):
    client, _ = app_env
    body = client.get("/api/health").json()
    assert body["status"] == "ok"
    assert body["catalog_items"] == 60
    assert body["backend"] == "scripted"


def test_items_are_always_catalog_members(app_env):
    client, _ = app_env
    body = client.post("/api/recommend", json={"request": "spooky please", "k": 10}).json()
    assert all(card["id"].startswith("g_") for card in body["items"])
