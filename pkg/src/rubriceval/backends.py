"""Judge backends: OpenAI-compatible HTTP, scripted replay, and a response cache."""

from __future__ import annotations

import asyncio
import hashlib
import json
import os
import tempfile
import time
from collections import defaultdict
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence, Union

from .judging import JudgeBackendResult, JudgeConfig, JudgeRequest, ThinkingLevel, TransportError


def _thinking_params(level: ThinkingLevel) -> dict[str, Any]:
    if level is None or level == "none":
        return {}
    if isinstance(level, int):
        return {"thinking": {"type": "enabled", "budget_tokens": level}}
    return {"reasoning_effort": level}


class HTTPBackend:
    """Chat-completions POST against ``config.endpoint_url``.

    The request body is ``{model, messages, **generation_params}`` plus the
    thinking setting; the API key comes from the env var named in the config.
    Cost is derived from token usage and the per-token prices in the config.
    """

    def __init__(self, timeout: float = 120.0, client=None):
        self.timeout = timeout
        self._client = client

    def _get_client(self):
        if self._client is None:
            import httpx

            self._client = httpx.AsyncClient(timeout=self.timeout)
        return self._client

    async def aclose(self) -> None:
        if self._client is not None:
            await self._client.aclose()
            self._client = None

    @staticmethod
    def build_payload(request: JudgeRequest) -> dict[str, Any]:
        config = request.config
        return {
            "model": config.model_id,
            "messages": request.messages,
            **config.generation_params,
            **_thinking_params(config.thinking_level),
        }

    async def complete(self, request: JudgeRequest) -> JudgeBackendResult:
        import httpx

        config = request.config
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(config.api_key_env_var)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = await self._get_client().post(config.endpoint_url, json=self.build_payload(request), headers=headers)
        except httpx.HTTPError as exc:
            raise TransportError(f"{type(exc).__name__}: {exc}") from exc
        if resp.status_code >= 400:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        return self.parse_reply(resp.json(), config)

    @staticmethod
    def parse_reply(body: Mapping[str, Any], config: JudgeConfig) -> JudgeBackendResult:
        try:
            text = body["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion body: {exc!r}") from exc
        usage = body.get("usage") or {}
        pt = int(usage.get("prompt_tokens", 0))
        ct = int(usage.get("completion_tokens", 0))
        cost = pt * config.input_cost_per_token + ct * config.output_cost_per_token
        return JudgeBackendResult(text, pt, ct, cost)


Responder = Callable[[JudgeRequest], Union[str, JudgeBackendResult]]


class ScriptedBackend:
    """Replays canned responses keyed by (item_id, criterion_id, judge_name).

    A value may be a list of strings, consumed by attempt number (the last
    entry repeats). A callable ``responder`` handles keys not in the table.
    Tracks call counts and peak in-flight calls per provider, which makes it
    usable as an instrumented stand-in for a real API.
    """

    def __init__(
        self,
        responses: Optional[Mapping[tuple[str, str, str], Union[str, Sequence[str]]]] = None,
        responder: Optional[Responder] = None,
        prompt_tokens: int = 0,
        completion_tokens: int = 0,
        cost: float = 0.0,
        delay: float = 0.0,
    ):
        self.responses = dict(responses or {})
        self.responder = responder
        self.prompt_tokens = prompt_tokens
        self.completion_tokens = completion_tokens
        self.cost = cost
        self.delay = delay
        self.calls: list[JudgeRequest] = []
        self.in_flight: dict[str, int] = defaultdict(int)
        self.peak_in_flight: dict[str, int] = defaultdict(int)

    @classmethod
    def from_jsonl(cls, path: str | Path, **kwargs) -> "ScriptedBackend":
        """Load ``{"item_id", "criterion_id", "judge_name", "response"}`` lines."""
        table = {}
        with open(path) as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                table[(str(row["item_id"]), row["criterion_id"], row["judge_name"])] = row["response"]
        return cls(table, **kwargs)

    @property
    def call_count(self) -> int:
        return len(self.calls)

    async def complete(self, request: JudgeRequest) -> JudgeBackendResult:
        provider = provider_of(request.config)
        self.calls.append(request)
        self.in_flight[provider] += 1
        self.peak_in_flight[provider] = max(self.peak_in_flight[provider], self.in_flight[provider])
        try:
            if self.delay:
                await asyncio.sleep(self.delay)
            else:
                await asyncio.sleep(0)
            return self._answer(request)
        finally:
            self.in_flight[provider] -= 1

    def _answer(self, request: JudgeRequest) -> JudgeBackendResult:
        key = (request.item_id, request.criterion_id, request.judge_name)
        if key in self.responses:
            value = self.responses[key]
            if not isinstance(value, str):
                value = value[min(request.attempt, len(value) - 1)]
        elif self.responder is not None:
            value = self.responder(request)
        else:
            raise TransportError(f"no scripted response for {key}")
        if isinstance(value, JudgeBackendResult):
            return value
        return JudgeBackendResult(value, self.prompt_tokens, self.completion_tokens, self.cost)


def provider_of(config: JudgeConfig) -> str:
    """Rate-limit bucket: the endpoint host, or the model id when there is no URL."""
    from urllib.parse import urlparse

    host = urlparse(config.endpoint_url).netloc if config.endpoint_url else ""
    return host or config.model_id


# -- caching -------------------------------------------------------------------

def compute_cache_key(
    model_id: str,
    messages: Sequence[Mapping[str, str]],
    generation_params: Mapping[str, Any],
    thinking_level: ThinkingLevel = None,
) -> str:
    """SHA-256 hex digest of the canonical JSON form of the full request."""
    canonical = json.dumps(
        {
            "model": model_id,
            "messages": [dict(m) for m in messages],
            "params": dict(generation_params),
            "thinking": thinking_level,
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ResponseCache:
    """Content-addressed response store, one JSON file per key.

    Entries are ``{key, raw_text, prompt_tokens, completion_tokens, cost,
    created_at}``. Writes go through a temp file and ``os.replace`` so
    concurrent readers never see a partial entry. TTL is checked on read.
    """

    def __init__(self, cache_dir: str | Path, ttl: Optional[float] = None, clock: Callable[[], float] = time.time):
        self.cache_dir = Path(cache_dir)
        self.ttl = ttl
        self.clock = clock

    def _path(self, key: str) -> Path:
        return self.cache_dir / key[:2] / f"{key}.json"

    def get(self, key: str) -> Optional[dict]:
        path = self._path(key)
        try:
            entry = json.loads(path.read_text())
        except (FileNotFoundError, json.JSONDecodeError):
            return None
        if self.ttl is not None and self.clock() - entry["created_at"] > self.ttl:
            return None
        return entry

    def put(self, key: str, result: JudgeBackendResult) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {
            "key": key,
            "raw_text": result.raw_text,
            "prompt_tokens": result.prompt_tokens,
            "completion_tokens": result.completion_tokens,
            "cost": result.cost,
            "created_at": self.clock(),
        }
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            json.dump(entry, fh)
        os.replace(tmp, path)


class CachedBackend:
    """Wraps a backend with a :class:`ResponseCache`.

    Hits cost nothing and report zero tokens. Re-queries (``attempt > 0``)
    skip the read so an unparseable cached reply is not served twice.
    """

    def __init__(self, inner, cache: ResponseCache):
        self.inner = inner
        self.cache = cache
        self.hits = 0
        self.misses = 0

    async def complete(self, request: JudgeRequest) -> JudgeBackendResult:
        cfg = request.config
        key = compute_cache_key(cfg.model_id, request.messages, cfg.generation_params, cfg.thinking_level)
        if request.attempt == 0:
            entry = self.cache.get(key)
            if entry is not None:
                self.hits += 1
                return JudgeBackendResult(entry["raw_text"], 0, 0, 0.0, cached=True)
        self.misses += 1
        result = await self.inner.complete(request)
        self.cache.put(key, result)
        return result
