import json
import threading

import pytest

from hadkit.errors import AuthError, BudgetExceeded, EndpointError, MockScriptError
from hadkit.gateway import (
    CompletionRequest,
    EndpointConfig,
    EndpointRegistry,
    Gateway,
    HttpBackend,
    MockRegistry,
    ScriptedBackend,
    load_mock_script,
)


def scripted_gateway(script, budget=None, delay=0.0):
    backend = ScriptedBackend(script, delay=delay)
    return Gateway(MockRegistry(), backend, sleep=lambda _: None, budget=budget), backend


def test_mock_passthrough_two_samples():
    gateway, _ = scripted_gateway({"responses": [["A", "B"]]})
    result = gateway.complete(CompletionRequest("injector", "p", temperature=1.0, n_samples=2))
    assert result.texts == ["A", "B"]
    assert result.attempt_count == 1


def test_five_samples_at_temperature_one():
    gateway, _ = scripted_gateway({"responses": [["a", "b", "c", "d", "e"]]})
    result = gateway.complete(CompletionRequest("injector", "p", temperature=1.0, n_samples=5))
    assert len(result.texts) == 5


def test_retry_429_twice_then_success():
    calls = {"n": 0}

    def transport(url, headers, payload, timeout):
        calls["n"] += 1
        if calls["n"] < 3:
            return 429, {}
        return 200, {"choices": [{"message": {"content": "ok"}}]}

    registry = EndpointRegistry([EndpointConfig("detector", base_url="http://x", model="m")])
    gateway = Gateway(registry, HttpBackend(transport=transport), sleep=lambda _: None)
    result = gateway.complete(CompletionRequest("detector", "p"))
    assert result.attempt_count == 3
    assert result.texts == ["ok"]


def test_retry_exhaustion_raises_endpoint_error():
    registry = EndpointRegistry([EndpointConfig("d", base_url="http://x", model="m")])
    gateway = Gateway(
        registry,
        HttpBackend(transport=lambda *a: (503, {})),
        max_attempts=3,
        sleep=lambda _: None,
    )
    with pytest.raises(EndpointError) as err:
        gateway.complete(CompletionRequest("d", "p"))
    assert err.value.attempts == 3


def test_auth_error_is_not_retried():
    calls = {"n": 0}

    def transport(url, headers, payload, timeout):
        calls["n"] += 1
        return 401, {}

    registry = EndpointRegistry([EndpointConfig("d", base_url="http://x", model="m")])
    gateway = Gateway(registry, HttpBackend(transport=transport), sleep=lambda _: None)
    with pytest.raises(AuthError):
        gateway.complete(CompletionRequest("d", "p"))
    assert calls["n"] == 1


def test_missing_api_key_env_is_auth_error(monkeypatch):
    monkeypatch.delenv("NOPE_KEY", raising=False)
    registry = EndpointRegistry(
        [EndpointConfig("d", base_url="http://x", model="m", api_key_env="NOPE_KEY")]
    )
    gateway = Gateway(registry, HttpBackend(transport=lambda *a: (200, {})), sleep=lambda _: None)
    with pytest.raises(AuthError):
        gateway.complete(CompletionRequest("d", "p"))


def test_http_payload_shape(monkeypatch):
    seen = {}

    def transport(url, headers, payload, timeout):
        seen["url"] = url
        seen["payload"] = payload
        seen["auth"] = headers.get("Authorization")
        return 200, {"choices": [{"message": {"content": "x"}}]}

    monkeypatch.setenv("KEY_ENV", "sk-test")
    registry = EndpointRegistry(
        [EndpointConfig("d", base_url="http://host/", model="mdl", api_key_env="KEY_ENV", system="sys")]
    )
    gateway = Gateway(registry, HttpBackend(transport=transport), sleep=lambda _: None)
    gateway.complete(CompletionRequest("d", "hello", temperature=0.0, n_samples=1, seed=7))
    assert seen["url"] == "http://host/v1/chat/completions"
    assert seen["auth"] == "Bearer sk-test"
    assert seen["payload"]["model"] == "mdl"
    assert seen["payload"]["messages"] == [
        {"role": "system", "content": "sys"},
        {"role": "user", "content": "hello"},
    ]
    assert seen["payload"]["n"] == 1
    assert seen["payload"]["seed"] == 7


def test_batch_alignment_and_error_slots():
    # ordinal 3 has no scripted entry -> that slot carries the error
    script = {"responses": [["r0"], ["r1"], ["r2"]]}
    gateway, _ = scripted_gateway(script)
    reqs = [CompletionRequest("e", f"p{i}") for i in range(4)]
    results = gateway.complete_batch(reqs, max_in_flight=3)
    assert [r.texts[0] for r in results[:3]] == ["r0", "r1", "r2"]
    assert isinstance(results[3], MockScriptError)


def test_batch_of_ten_aligned():
    script = {"responses": [[f"r{i}"] for i in range(10)]}
    gateway, _ = scripted_gateway(script)
    results = gateway.complete_batch([CompletionRequest("e", f"p{i}") for i in range(10)], 3)
    assert [r.texts[0] for r in results] == [f"r{i}" for i in range(10)]


def test_serialized_dispatch_with_max_one():
    script = {"responses": [[f"r{i}"] for i in range(5)]}
    gateway, backend = scripted_gateway(script)
    gateway.complete_batch([CompletionRequest("e", f"p{i}") for i in range(5)], max_in_flight=1)
    assert backend.peak_in_flight == 1
    assert [p for _, p in backend.prompts] == [f"p{i}" for i in range(5)]


def test_peak_concurrency_bounded():
    script = {"default": ["x"]}
    gateway, backend = scripted_gateway(script, delay=0.02)
    gateway.complete_batch([CompletionRequest("e", f"p{i}") for i in range(12)], max_in_flight=3)
    assert backend.peak_in_flight <= 3


def test_budget_exceeded():
    gateway, _ = scripted_gateway({"default": ["x"]}, budget=2)
    gateway.complete(CompletionRequest("e", "a"))
    gateway.complete(CompletionRequest("e", "b"))
    with pytest.raises(BudgetExceeded):
        gateway.complete(CompletionRequest("e", "c"))


def test_request_validation():
    gateway, _ = scripted_gateway({"default": ["x"]})
    with pytest.raises(ValueError):
        gateway.complete(CompletionRequest("e", "p", n_samples=0))
    with pytest.raises(ValueError):
        gateway.complete(CompletionRequest("e", "p", temperature=3.0))
    with pytest.raises(ValueError):
        gateway.complete(CompletionRequest("e", "p", temperature=0.0, n_samples=2))


def test_scripted_by_prompt_hash():
    import hashlib

    digest = hashlib.sha256("the prompt".encode()).hexdigest()
    gateway, _ = scripted_gateway({"by_prompt_sha256": {digest: ["matched"]}, "default": ["fallback"]})
    assert gateway.complete(CompletionRequest("e", "the prompt")).texts == ["matched"]
    assert gateway.complete(CompletionRequest("e", "other")).texts == ["fallback"]


def test_scripted_per_endpoint_sections():
    script = {"injector": {"default": ["inj"]}, "verifier": {"default": ["ver"]}}
    gateway, _ = scripted_gateway(script)
    assert gateway.complete(CompletionRequest("injector", "p")).texts == ["inj"]
    assert gateway.complete(CompletionRequest("verifier", "p")).texts == ["ver"]
    with pytest.raises(MockScriptError):
        gateway.complete(CompletionRequest("unknown", "p"))


def test_scripted_entry_too_short():
    gateway, _ = scripted_gateway({"responses": [["only-one"]]})
    with pytest.raises(MockScriptError):
        gateway.complete(CompletionRequest("e", "p", temperature=1.0, n_samples=3))


def test_registry_from_file(tmp_path):
    path = tmp_path / "endpoints.json"
    path.write_text(
        json.dumps(
            {
                "endpoints": [
                    {"id": "injector", "base_url": "http://a", "model": "m1", "api_key_env": "K"},
                    {"id": "wiki", "kind": "retriever", "fixture": "f.json"},
                ]
            }
        ),
        encoding="utf-8",
    )
    registry = EndpointRegistry.from_path(path)
    assert registry.get("injector").model == "m1"
    assert registry.get("wiki").kind == "retriever"
    assert registry.ids() == ["injector", "wiki"]
    with pytest.raises(EndpointError):
        registry.get("missing")


def test_load_mock_script_rejects_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("[1,", encoding="utf-8")
    with pytest.raises(MockScriptError):
        load_mock_script(path)


def test_concurrent_completes_are_thread_safe():
    gateway, backend = scripted_gateway({"default": ["x"]})
    errors = []

    def worker():
        try:
            for _ in range(20):
                gateway.complete(CompletionRequest("e", "p"))
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert gateway.requests_made == 80
