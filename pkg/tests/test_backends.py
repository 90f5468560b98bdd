import asyncio
import json

import httpx
import pytest

from rubriceval import CachedBackend, HTTPBackend, JudgeConfig, ResponseCache, ScriptedBackend, compute_cache_key
from rubriceval.judging import JudgeRequest, TransportError

MESSAGES = [{"role": "system", "content": "sys"}, {"role": "user", "content": "usr"}]


def test_cache_key_deterministic():
    a = compute_cache_key("m", MESSAGES, {"temperature": 0.0, "max_tokens": 10})
    assert a == compute_cache_key("m", MESSAGES, {"temperature": 0.0, "max_tokens": 10})
    assert len(a) == 64 and int(a, 16) >= 0


def test_cache_key_param_order_irrelevant():
    assert compute_cache_key("m", MESSAGES, {"temperature": 0.0, "max_tokens": 10}) == compute_cache_key(
        "m", MESSAGES, {"max_tokens": 10, "temperature": 0.0}
    )


@pytest.mark.parametrize(
    "other",
    [
        ("m", MESSAGES, {"temperature": 0.1}, None),
        ("m2", MESSAGES, {"temperature": 0.0}, None),
        ("m", MESSAGES[::-1], {"temperature": 0.0}, None),
        ("m", MESSAGES, {"temperature": 0.0}, "high"),
    ],
)
def test_cache_key_sensitive(other):
    assert compute_cache_key("m", MESSAGES, {"temperature": 0.0}) != compute_cache_key(*other)


def _request(**cfg):
    return JudgeRequest(MESSAGES, JudgeConfig(**cfg), "i", "c", "j")


def test_cache_hit_costs_nothing(tmp_path):
    inner = ScriptedBackend(responder=lambda r: "reply", prompt_tokens=7, completion_tokens=3, cost=0.01)
    cached = CachedBackend(inner, ResponseCache(tmp_path))
    first = asyncio.run(cached.complete(_request()))
    second = asyncio.run(cached.complete(_request()))
    assert first.cost == 0.01 and not first.cached
    assert second.raw_text == "reply" and second.cached
    assert (second.cost, second.total_tokens) == (0.0, 0)
    assert inner.call_count == 1


def test_cache_ttl(tmp_path):
    now = [1000.0]
    cache = ResponseCache(tmp_path, ttl=3600, clock=lambda: now[0])
    inner = ScriptedBackend(responder=lambda r: "reply")
    cached = CachedBackend(inner, cache)
    asyncio.run(cached.complete(_request()))
    now[0] += 3599
    asyncio.run(cached.complete(_request()))
    assert inner.call_count == 1
    now[0] += 2
    asyncio.run(cached.complete(_request()))
    assert inner.call_count == 2


def test_cache_entry_layout(tmp_path):
    cache = ResponseCache(tmp_path)
    inner = ScriptedBackend(responder=lambda r: "reply")
    asyncio.run(CachedBackend(inner, cache).complete(_request()))
    files = list(tmp_path.rglob("*.json"))
    assert len(files) == 1
    entry = json.loads(files[0].read_text())
    assert set(entry) == {"key", "raw_text", "prompt_tokens", "completion_tokens", "cost", "created_at"}
    assert files[0].stem == entry["key"]
    assert not list(tmp_path.rglob("*.tmp"))


def test_requery_bypasses_cache(tmp_path):
    inner = ScriptedBackend(responder=lambda r: f"reply{r.attempt}")
    cached = CachedBackend(inner, ResponseCache(tmp_path))
    asyncio.run(cached.complete(_request()))
    req = JudgeRequest(MESSAGES, JudgeConfig(), "i", "c", "j", attempt=1)
    assert asyncio.run(cached.complete(req)).raw_text == "reply1"


def test_scripted_from_jsonl(tmp_path):
    path = tmp_path / "s.jsonl"
    path.write_text(
        json.dumps({"item_id": "i", "criterion_id": "c", "judge_name": "j", "response": "hello"}) + "\n"
        + json.dumps({"item_id": "i", "criterion_id": "d", "judge_name": "j", "response": ["a", "b"]}) + "\n"
    )
    backend = ScriptedBackend.from_jsonl(path)
    assert asyncio.run(backend.complete(_request())).raw_text == "hello"
    with pytest.raises(TransportError):
        asyncio.run(backend.complete(JudgeRequest(MESSAGES, JudgeConfig(), "x", "c", "j")))


def _mock_backend(handler):
    client = httpx.AsyncClient(transport=httpx.MockTransport(handler))
    return HTTPBackend(client=client)


def test_http_wire_format(monkeypatch):
    seen = {}

    def handler(request: httpx.Request):
        seen["body"] = json.loads(request.content)
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(
            200,
            json={
                "choices": [{"message": {"role": "assistant", "content": '{"criterion_status": "MET"}'}}],
                "usage": {"prompt_tokens": 100, "completion_tokens": 20},
            },
        )

    monkeypatch.setenv("MY_KEY", "sk-test")
    cfg = dict(
        model_id="model-x",
        endpoint_url="https://api.example.com/v1/chat/completions",
        api_key_env_var="MY_KEY",
        generation_params={"temperature": 0.0, "max_tokens": 256},
        thinking_level="medium",
        input_cost_per_token=1e-6,
        output_cost_per_token=4e-6,
    )
    result = asyncio.run(_mock_backend(handler).complete(_request(**cfg)))
    assert seen["body"] == {
        "model": "model-x",
        "messages": MESSAGES,
        "temperature": 0.0,
        "max_tokens": 256,
        "reasoning_effort": "medium",
    }
    assert seen["auth"] == "Bearer sk-test"
    assert result.raw_text == '{"criterion_status": "MET"}'
    assert (result.prompt_tokens, result.completion_tokens) == (100, 20)
    assert result.cost == pytest.approx(100e-6 + 80e-6)


def test_http_thinking_budget():
    body = HTTPBackend.build_payload(_request(thinking_level=1024))
    assert body["thinking"] == {"type": "enabled", "budget_tokens": 1024}


def test_http_errors_are_transport_errors():
    backend = _mock_backend(lambda r: httpx.Response(503, text="overloaded"))
    with pytest.raises(TransportError):
        asyncio.run(backend.complete(_request(endpoint_url="https://api.example.com/v1")))
