"""HTTP clients for the caption model and the knowledge graph, with replay.

Every request is keyed by a hash of its canonical JSON form.  In ``auto``
mode a cached response short-circuits the network; ``replay`` never touches
the network (a miss is an error) and ``record`` always refreshes the cache.
The cache is what makes corpus construction reproducible offline.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Callable

import requests

MODES = ("auto", "replay", "record")

Transport = Callable[[str, dict], dict]


class ServiceUnavailableError(RuntimeError):
    """The backing service could not produce a response (or replay missed)."""


class EmptyResponseError(ValueError):
    """The service answered with no usable content."""


def request_key(request: dict) -> str:
    """Stable cache key: sha256 of the canonical JSON of the request."""
    canonical = json.dumps(request, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ReplayCache:
    """One JSON file per request under ``directory``, written atomically."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))["response"]

    def put(self, key: str, request: dict, response: dict) -> None:
        path = self._path(key)
        tmp = path.with_suffix(".tmp")
        body = json.dumps({"request": request, "response": response}, indent=2, ensure_ascii=False)
        tmp.write_text(body + "\n", encoding="utf-8")
        os.replace(tmp, path)

    def __len__(self) -> int:
        return sum(1 for _ in self.directory.glob("*.json"))


def _default_post(url: str, payload: dict) -> dict:
    reply = requests.post(url, json=payload, timeout=60)
    reply.raise_for_status()
    return reply.json()


def _default_get(url: str, payload: dict) -> dict:
    reply = requests.get(url, params=payload, timeout=60)
    reply.raise_for_status()
    return reply.json()


class _CachedClient:
    def __init__(self, cache: ReplayCache | None, mode: str, transport: Transport, endpoint: str):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        if mode == "replay" and cache is None:
            raise ValueError("replay mode needs a cache directory")
        self.cache = cache
        self.mode = mode
        self.transport = transport
        self.endpoint = endpoint

    def _call(self, request: dict) -> dict:
        key = request_key(request)
        if self.mode in ("auto", "replay") and self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return hit
        if self.mode == "replay":
            raise ServiceUnavailableError(f"replay miss for request {key}")
        try:
            response = self.transport(self.endpoint, request["payload"])
        except Exception as exc:
            raise ServiceUnavailableError(f"request to {self.endpoint} failed: {exc}") from exc
        if self.cache is not None:
            self.cache.put(key, request, response)
        return response


class LLMClient(_CachedClient):
    """Text completion client; POSTs ``{"model", "prompt"}``."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        cache: ReplayCache | None = None,
        mode: str = "auto",
        transport: Transport | None = None,
    ):
        super().__init__(cache, mode, transport or _default_post, endpoint)
        self.model = model

    def complete(self, prompt: str) -> str:
        request = {
            "kind": "llm",
            "model": self.model,
            "payload": {"model": self.model, "prompt": prompt},
        }
        response = self._call(request)
        text = response.get("text", "")
        if not text.strip():
            raise EmptyResponseError("completion came back empty")
        return text


class KGClient(_CachedClient):
    """Knowledge-graph lookup client; GETs the triples touching an entity."""

    def __init__(
        self,
        endpoint: str,
        cache: ReplayCache | None = None,
        mode: str = "auto",
        transport: Transport | None = None,
    ):
        super().__init__(cache, mode, transport or _default_get, endpoint)

    def neighbors(self, entity: str) -> list[tuple[str, str, str]]:
        request = {"kind": "kg", "payload": {"entity": entity}}
        response = self._call(request)
        triples = response.get("triples")
        if triples is None:
            raise EmptyResponseError(f"no triple list in response for {entity!r}")
        out = []
        for item in triples:
            if len(item) != 3:
                raise EmptyResponseError(f"malformed triple {item!r} for {entity!r}")
            out.append((str(item[0]), str(item[1]), str(item[2])))
        return out
