"""HTTP service contract tests against a live instance with mock providers."""

import json

import pytest
import requests

from darjabot.service import ChatService


@pytest.fixture()
def live(engine):
    service = ChatService(engine, host="127.0.0.1", port=0)
    host, port = service.start_background()
    yield f"http://{host}:{port}", engine
    service.stop()


def test_healthz(live):
    base, _ = live
    resp = requests.get(f"{base}/v1/healthz", timeout=5)
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


def test_chat_deterministic_route(live):
    base, _ = live
    resp = requests.post(
        f"{base}/v1/chat", json={"session_id": "s1", "text": "nheb nactivi roaming"}, timeout=10
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["route"] == "nlu"
    assert body["sources"] == []
    assert body["intent"] == "activate_roaming"
    assert 0.0 <= body["confidence"] <= 1.0
    assert "latency_ms" in body


def test_chat_rag_route_has_sources(live):
    base, _ = live
    resp = requests.post(
        f"{base}/v1/chat",
        json={"session_id": "s2", "text": "chhal prix dyal offre pixx 500"},
        timeout=10,
    )
    body = resp.json()
    assert body["route"] == "rag"
    assert body["intent"] is None
    assert body["sources"]


def test_chat_empty_text_is_400(live):
    base, _ = live
    resp = requests.post(f"{base}/v1/chat", json={"session_id": "s3", "text": ""}, timeout=5)
    assert resp.status_code == 400
    assert resp.json()["error"]["code"] == "bad_request"


def test_chat_missing_session_is_400(live):
    base, _ = live
    resp = requests.post(f"{base}/v1/chat", json={"text": "salam"}, timeout=5)
    assert resp.status_code == 400


def test_chat_invalid_json_is_400(live):
    base, _ = live
    resp = requests.post(
        f"{base}/v1/chat", data=b"{nope", headers={"Content-Type": "application/json"}, timeout=5
    )
    assert resp.status_code == 400
    assert "error" in resp.json()


def test_classify_endpoint(live):
    base, _ = live
    resp = requests.post(f"{base}/v1/classify", json={"text": "Sa7a, nheb nactivi roaming"}, timeout=5)
    assert resp.status_code == 200
    body = resp.json()
    assert body["intent"] == "activate_roaming"
    assert body["script"] == "latin"
    assert "saha" in body["normalized"]


def test_unknown_route_404(live):
    base, _ = live
    assert requests.get(f"{base}/v1/nope", timeout=5).status_code == 404
    assert requests.post(f"{base}/v1/nope", json={}, timeout=5).status_code == 404


def test_metrics_endpoint_plaintext(live):
    base, _ = live
    requests.post(f"{base}/v1/chat", json={"session_id": "m", "text": "nheb nactivi roaming"}, timeout=10)
    resp = requests.get(f"{base}/v1/metrics", timeout=5)
    assert resp.status_code == 200
    assert resp.headers["Content-Type"].startswith("text/plain")
    assert "chat_requests_total" in resp.text


def test_live_reingest_then_cited_without_restart(live, tmp_path):
    base, engine = live
    new_doc = (
        "## Nova Fiber\n"
        "Offre nova fiber: prix 3500 DA par mois, debit 100 mega, installation gratuite. "
        "Activation nova fiber: code *900#.\n"
    )
    resp = requests.post(
        f"{base}/v1/ingest",
        json={"doc_id": "fiber_pack", "title": "fiber", "body": new_doc, "format": "markdown"},
        timeout=15,
    )
    assert resp.status_code == 200
    assert resp.json()["chunks"] >= 1
    chat = requests.post(
        f"{base}/v1/chat",
        json={"session_id": "s9", "text": "chhal prix dyal nova fiber par mois"},
        timeout=15,
    ).json()
    assert chat["route"] == "rag"
    assert any(src.startswith("fiber_pack#") for src in chat["sources"])


def test_ingest_missing_fields_400(live):
    base, _ = live
    resp = requests.post(f"{base}/v1/ingest", json={"title": "x"}, timeout=5)
    assert resp.status_code == 400


def test_chat_responses_are_json_never_traces(live):
    base, _ = live
    resp = requests.post(f"{base}/v1/chat", data=b"", timeout=5)
    assert resp.status_code == 400
    body = resp.json()
    assert set(body["error"]) == {"code", "message"}
    assert "Traceback" not in resp.text
