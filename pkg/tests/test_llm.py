from __future__ import annotations

import json

import pytest
import requests

from omulet.errors import ScriptedMissError, TransportError, ValidationError
from omulet.llm import (
    CachingBackend,
    CompletionRequest,
    HttpBackend,
    ScriptedBackend,
    complete,
    prompt_digest,
)


def req(prompt="hello", **kwargs) -> CompletionRequest:
    return CompletionRequest(prompt=prompt, **kwargs)


def test_request_validation():
    with pytest.raises(ValidationError):
        CompletionRequest(prompt="")
    with pytest.raises(ValidationError):
        CompletionRequest(prompt="x", temperature=-1)
    with pytest.raises(ValidationError):
        CompletionRequest(prompt="x", max_tokens=0)


def test_scripted_first_match_wins():
    backend = ScriptedBackend([("Enumerate 20", "the list"), ("Enumerate", "other")])
    assert complete(backend, req("please Enumerate 20 games")) == "the list"


def test_scripted_digest_match():
    import hashlib

    digest = hashlib.sha256(b"exact prompt").hexdigest()
    backend = ScriptedBackend([(f"sha256:{digest}", "matched")])
    assert complete(backend, req("exact prompt")) == "matched"
    with pytest.raises(ScriptedMissError):
        complete(backend, req("different prompt"))


def test_scripted_miss_names_digest():
    backend = ScriptedBackend([])
    with pytest.raises(ScriptedMissError) as exc:
        complete(backend, req("mystery"))
    assert prompt_digest("scripted", "mystery", 0.0) in str(exc.value)


def test_scripted_default_response():
    backend = ScriptedBackend([], default_response="fallback")
    assert complete(backend, req("anything")) == "fallback"


def test_scripted_is_pure():
    backend = ScriptedBackend([("a", "x")])
    assert complete(backend, req("has a inside")) == complete(backend, req("has a inside"))


def test_cache_round_trip(tmp_path):
    inner = ScriptedBackend([], default_response="cached text")
    backend = CachingBackend(inner, tmp_path / "cache")
    first = complete(backend, req("the prompt"))
    second = complete(backend, req("the prompt"))
    assert first == second == "cached text"
    assert inner.calls == 1
    # Different prompt misses far cache.
    complete(backend, req("another prompt"))
    assert inner.calls == 2


def test_cache_keyed_by_temperature(tmp_path):
    inner = ScriptedBackend([], default_response="t")
    backend = CachingBackend(inner, tmp_path)
    complete(backend, req("p", temperature=0.0))
    complete(backend, req("p", temperature=0.5))
    assert inner.calls == 2


class _FakeResponse:
    def __init__(self, status_code=200, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload or {}
        self.text = text

    def json(self):
        return self._payload


class _FakeSession:
    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.calls = 0
        self.last_kwargs = None

    def post(self, url, **kwargs):
        self.calls += 1
        self.last_kwargs = {"url": url, **kwargs}
        outcome = self.outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome


def _chat_payload(text):
    return {"choices": [{"message": {"content": text}}]}


def test_http_backend_success_and_wire_shape():
    session = _FakeSession([_FakeResponse(payload=_chat_payload("hi there"))])
    backend = HttpBackend("http://llm.local/v1", api_key="k", model="m", session=session, sleep=lambda s: None)
    assert backend.complete(req("ping", max_tokens=32)) == "hi there"
    assert session.last_kwargs["url"] == "http://llm.local/v1/chat/completions"
    body = session.last_kwargs["json"]
    assert body["model"] == "m"
    assert body["messages"] == [{"role": "user", "content": "ping"}]
    assert body["temperature"] == 0.0
    assert session.last_kwargs["headers"]["Authorization"] == "Bearer k"


def test_http_backend_retries_then_succeeds():
    sleeps = []
    session = _FakeSession(
        [
            requests.ConnectionError("boom"),
            _FakeResponse(status_code=503),
            _FakeResponse(payload=_chat_payload("ok")),
        ]
    )
    backend = HttpBackend("http://x", session=session, sleep=sleeps.append)
    assert backend.complete(req("p")) == "ok"
    assert session.calls == 3
    assert sleeps == [0.5, 1.0]


def test_http_backend_gives_up_after_retries():
    session = _FakeSession([requests.ConnectionError("boom")] * 4)
    backend = HttpBackend("http://x", session=session, sleep=lambda s: None)
    with pytest.raises(TransportError):
        backend.complete(req("p"))
    assert session.calls == 4


def test_http_backend_client_error_is_not_retried():
    session = _FakeSession([_FakeResponse(status_code=401, text="no")])
    backend = HttpBackend("http://x", session=session, sleep=lambda s: None)
    with pytest.raises(TransportError, match="401"):
        backend.complete(req("p"))
    assert session.calls == 1


def test_http_backend_from_env(monkeypatch):
    monkeypatch.delenv("OMULET_LLM_BASE_URL", raising=False)
    with pytest.raises(ValidationError):
        HttpBackend.from_env()
    monkeypatch.setenv("OMULET_LLM_BASE_URL", "http://llm")
    monkeypatch.setenv("OMULET_LLM_MODEL", "big-model")
    backend = HttpBackend.from_env()
    assert backend.model_tag == "big-model"


def test_scripted_from_file(tmp_path):
    path = tmp_path / "rules.json"
    path.write_text(json.dumps({"rules": [{"match": "x", "response": "y"}], "default": "d"}))
    backend = ScriptedBackend.from_file(path)
    assert complete(backend, req("has x")) == "y"
    assert complete(backend, req("nope")) == "d"
