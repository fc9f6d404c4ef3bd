"""Uniform completion interface over interchangeable model backends.

Two backends ship with the engine: an HTTP client speaking the de facto
chat-completions JSON shape (endpoint and credentials via the
``OMULET_LLM_*`` environment variables), and a scripted backend that maps
prompt patterns to canned responses for tests and offline runs. Either can
be wrapped in an on-disk cache keyed by (model tag, prompt digest,
temperature); cache files are content-addressed so concurrent writers are
safe.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from .errors import ScriptedMissError, TransportError, ValidationError

ENV_BASE_URL = "OMULET_LLM_BASE_URL"
ENV_API_KEY = "OMULET_LLM_API_KEY"
ENV_MODEL = "OMULET_LLM_MODEL"

MAX_RETRIES = 3
BACKOFF_BASE_S = 0.5
DEFAULT_CONCURRENCY = 4


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 1024
    model_tag: str = "default"

    def __post_init__(self):
        if not self.prompt:
            raise ValidationError("completion prompt must be non-empty")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValidationError("max_tokens must be positive")


def prompt_digest(model_tag: str, prompt: str, temperature: float) -> str:
    """Stable 256-bit digest of the exact request bytes."""
    material = f"{model_tag}\x00{temperature!r}\x00{prompt}".encode("utf-8")
    return hashlib.sha256(material).hexdigest()


def model_tag_of(backend) -> str:
    return getattr(backend, "model_tag", "default")


class ScriptedBackend:
    """Deterministic test double: first matching rule wins.

    A rule matcher is either a plain substring of the prompt or
    ``"sha256:<hex>"`` to match the exact prompt digest.
    """

    model_tag = "scripted"

    def __init__(self, rules: list[tuple[str, str]], default_response: str | None = None):
        self.rules = list(rules)
        self.default_response = default_response
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        rules = [(str(r["match"]), str(r["response"])) for r in data.get("rules", [])]
        return cls(rules, default_response=data.get("default"))

    def complete(self, request: CompletionRequest) -> str:
        self.calls += 1
        for matcher, response in self.rules:
            if matcher.startswith("sha256:"):
                if matcher[len("sha256:"):] == hashlib.sha256(request.prompt.encode()).hexdigest():
                    return response
            elif matcher in request.prompt:
                return response
        if self.default_response is not None:
            return self.default_response
        digest = prompt_digest(self.model_tag, request.prompt, request.temperature)
        raise ScriptedMissError(f"no scripted rule for prompt (digest {digest})")


class HttpBackend:
    """Chat-completions HTTP client with retry and bounded concurrency."""

    def __init__(
        self,
        base_url: str,
        api_key: str = "",
        model: str = "default",
        timeout_s: float = 60.0,
        max_retries: int = MAX_RETRIES,
        max_concurrency: int = DEFAULT_CONCURRENCY,
        sleep=time.sleep,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model_tag = model
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self._sleep = sleep
        self._session = session or requests.Session()
        self._semaphore = threading.Semaphore(max_concurrency)

    @classmethod
    def from_env(cls, **kwargs) -> "HttpBackend":
        base_url = os.environ.get(ENV_BASE_URL)
        if not base_url:
            raise ValidationError(f"{ENV_BASE_URL} is not set; no remote backend configured")
        return cls(
            base_url=base_url,
            api_key=os.environ.get(ENV_API_KEY, ""),
            model=os.environ.get(ENV_MODEL, "default"),
            **kwargs,
        )

    def complete(self, request: CompletionRequest) -> str:
        payload = {
            "model": self.model_tag,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.base_url}/chat/completions"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(BACKOFF_BASE_S * 2 ** (attempt - 1))
            with self._semaphore:
                try:
                    response = self._session.post(
                        url, json=payload, headers=headers, timeout=self.timeout_s
                    )
                except requests.RequestException as exc:
                    last_error = exc
                    continue
            if response.status_code >= 500 or response.status_code == 429:
                last_error = TransportError(f"HTTP {response.status_code} from {url}")
                continue
            if response.status_code >= 400:
                raise TransportError(f"HTTP {response.status_code} from {url}: {response.text[:200]}")
            return self._extract_text(response.json())
        raise TransportError(f"backend unreachable after {self.max_retries + 1} attempts: {last_error}")

    @staticmethod
    def _extract_text(data: dict) -> str:
        try:
            choice = data["choices"][0]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion response: {exc}") from exc
        message = choice.get("message")
        if isinstance(message, dict) and "content" in message:
            return str(message["content"])
        if "text" in choice:
            return str(choice["text"])
        raise TransportError("completion response carries no text")


class CachingBackend:
    """Wraps any backend with a content-addressed on-disk response cache."""

    def __init__(self, inner, cache_dir: str | Path):
        self.inner = inner
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    @property
    def model_tag(self) -> str:
        return model_tag_of(self.inner)

    def _path(self, request: CompletionRequest) -> Path:
        digest = prompt_digest(self.model_tag, request.prompt, request.temperature)
        return self.cache_dir / f"{digest}.txt"

    def complete(self, request: CompletionRequest) -> str:
        path = self._path(request)
        if path.exists():
            return path.read_text("utf-8")
        text = self.inner.complete(request)
        # Atomic write: concurrent writers race to an identical rename.
        fd, tmp_name = tempfile.mkstemp(dir=self.cache_dir, suffix=".part")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp_name, path)
        finally:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
        return text


def complete(backend, request: CompletionRequest) -> str:
    """Run one completion against any backend object."""
    return backend.complete(request)
