"""HTTP facade: recommendations plus an append-only feedback log.

Responses include the formatted intent so operators can see how a request
was understood. Feedback is a flat JSON-lines log with one serialized
writer; every accepted event is flushed to disk before the response goes
out, so replaying the log reconstructs exactly what was accepted.
"""

from __future__ import annotations

import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeoutError
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .catalog import Catalog
from .errors import TransportError
from .intent import IntentPromptSpec
from .llm import model_tag_of
from .policy import PolicyConfig
from .recommender import MODES, recommend

MAX_BODY_BYTES = 4096
MAX_K = 20
DEFAULT_TIMEOUT_S = 30.0
VERDICTS = ("up", "down")


class FeedbackLog:
    """Append-only JSON-lines log with a single serialized writer."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._last_ts = 0

    def append(self, event: dict) -> dict:
        with self._lock:
            event = dict(event)
            event["timestamp"] = max(int(time.time()), self._last_ts)
            self._last_ts = event["timestamp"]
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        return event


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(
    catalog: Catalog,
    backend,
    feedback_log: str | Path,
    policy_config: PolicyConfig | None = None,
    prompt_spec: IntentPromptSpec | None = None,
    default_mode: str = "omulet_p",
    timeout_s: float = DEFAULT_TIMEOUT_S,
    ui_origin: str | None = None,
    seed: int = 0,
) -> FastAPI:
    app = FastAPI(title="omulet", docs_url=None, redoc_url=None)
    log = FeedbackLog(feedback_log)
    executor = ThreadPoolExecutor(max_workers=8)

    if ui_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[ui_origin],
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )

    async def _read_json(request: Request) -> tuple[dict | None, JSONResponse | None]:
        body = await request.body()
        if len(body) > MAX_BODY_BYTES:
            return None, _error(400, f"request body exceeds {MAX_BODY_BYTES} bytes")
        try:
            data = json.loads(body or b"{}")
        except json.JSONDecodeError:
            return None, _error(400, "request body is not valid JSON")
        if not isinstance(data, dict):
            return None, _error(400, "request body must be a JSON object")
        return data, None

    @app.post("/api/recommend")
    async def api_recommend(request: Request):
        data, failure = await _read_json(request)
        if failure:
            return failure
        text = str(data.get("request") or "").strip()
        if not text:
            return _error(400, "field 'request' must be a non-empty string")
        mode = data.get("mode") or default_mode
        if mode not in MODES:
            return _error(400, f"unknown mode {mode!r}")
        try:
            k = int(data["k"]) if "k" in data else 10
        except (TypeError, ValueError):
            return _error(400, "field 'k' must be an integer")
        if not 1 <= k <= MAX_K:
            return _error(400, f"field 'k' must be in 1..{MAX_K}")

        started = time.perf_counter()
        future = executor.submit(
            recommend, catalog, backend, text,
            mode=mode, k=k, seed=seed,
            policy_config=policy_config, prompt_spec=prompt_spec,
        )
        try:
            outcome = future.result(timeout=timeout_s)
        except FutureTimeoutError:
            return _error(504, f"recommendation timed out after {timeout_s:.0f}s")
        except TransportError as exc:
            return _error(502, f"model backend unavailable: {exc}")
        latency_ms = int((time.perf_counter() - started) * 1000)

        items = []
        for game_id in outcome.items:
            game = catalog.games[game_id]
            items.append(
                {
                    "id": game.id,
                    "name": game.name,
                    "genre": game.genre,
                    "description": game.description,
                    "rank": game.rank,
                }
            )
        return {
            "items": items,
            "factual_fraction": outcome.factual_fraction,
            "intent": outcome.intent.to_dict() if outcome.intent else None,
            "latency_ms": latency_ms,
        }

    @app.post("/api/feedback")
    async def api_feedback(request: Request):
        data, failure = await _read_json(request)
        if failure:
            return failure
        verdict = data.get("verdict")
        if verdict not in VERDICTS:
            return _error(400, f"field 'verdict' must be one of {list(VERDICTS)}")
        event = {
            "session_id": str(data.get("session_id") or ""),
            "request_text": str(data.get("request_text") or ""),
            "item_id": data.get("item_id"),
            "verdict": verdict,
        }
        if event["item_id"] is not None:
            event["item_id"] = str(event["item_id"])
        try:
            log.append(event)
        except OSError as exc:
            return _error(500, f"could not persist feedback: {exc}")
        return {"accepted": True}

    @app.get("/api/health")
    async def api_health():
        return {
            "status": "ok",
            "catalog_items": len(catalog),
            "backend": model_tag_of(backend),
        }

    return app
