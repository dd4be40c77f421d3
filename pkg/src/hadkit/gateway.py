"""Uniform client for chat-completion endpoints.

Real traffic speaks the OpenAI-compatible chat-completions wire format; tests
and offline runs swap in a scripted backend keyed by request ordinal or
prompt hash, which makes every downstream stage deterministic.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import httpx

from .errors import AuthError, BudgetExceeded, EndpointError, HadkitError, MockScriptError, SchemaError

DEFAULT_MAX_TOKENS = 2048
RETRYABLE_STATUSES = {408, 409, 429, 500, 502, 503, 504}


@dataclass
class CompletionRequest:
    endpoint_id: str
    prompt: str
    temperature: float = 0.0
    n_samples: int = 1
    max_tokens: int = DEFAULT_MAX_TOKENS
    seed: int | None = None


@dataclass
class CompletionResult:
    texts: list[str]
    endpoint_id: str
    latency: float
    attempt_count: int


@dataclass
class EndpointConfig:
    endpoint_id: str
    base_url: str = ""
    model: str = ""
    api_key_env: str | None = None
    system: str | None = None
    kind: str = "chat"  # "chat" or "retriever"
    fixture: str | None = None  # file-backed mock for retriever endpoints


class EndpointRegistry:
    def __init__(self, endpoints: list[EndpointConfig]) -> None:
        self._by_id = {e.endpoint_id: e for e in endpoints}

    @classmethod
    def from_path(cls, path: str | Path) -> "EndpointRegistry":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"endpoint registry {path}: invalid JSON: {exc.msg}") from exc
        endpoints = []
        for item in data.get("endpoints", []):
            if "id" not in item:
                raise SchemaError(f"endpoint registry {path}: entry missing 'id'")
            endpoints.append(
                EndpointConfig(
                    endpoint_id=item["id"],
                    base_url=item.get("base_url", ""),
                    model=item.get("model", ""),
                    api_key_env=item.get("api_key_env"),
                    system=item.get("system"),
                    kind=item.get("kind", "chat"),
                    fixture=item.get("fixture"),
                )
            )
        return cls(endpoints)

    def get(self, endpoint_id: str) -> EndpointConfig:
        try:
            return self._by_id[endpoint_id]
        except KeyError:
            raise EndpointError(endpoint_id, "not registered") from None

    def ids(self) -> list[str]:
        return sorted(self._by_id)


class MockRegistry(EndpointRegistry):
    """Registry that fabricates a config for any id; only sensible together
    with a scripted backend."""

    def __init__(self) -> None:
        super().__init__([])

    def get(self, endpoint_id: str) -> EndpointConfig:
        return EndpointConfig(endpoint_id=endpoint_id, model="mock")


class TransientBackendError(Exception):
    """Retryable transport failure (timeout, 429, 5xx)."""


def _default_transport(url: str, headers: dict, payload: dict, timeout: float):
    response = httpx.post(url, headers=headers, json=payload, timeout=timeout)
    try:
        body = response.json()
    except ValueError:
        body = {}
    return response.status_code, body


class HttpBackend:
    """OpenAI-compatible chat completions over HTTPS."""

    def __init__(self, transport: Callable = _default_transport, timeout: float = 60.0) -> None:
        self._transport = transport
        self._timeout = timeout

    def generate(self, endpoint: EndpointConfig, req: CompletionRequest, ordinal: int) -> list[str]:
        headers = {"Content-Type": "application/json"}
        if endpoint.api_key_env:
            key = os.environ.get(endpoint.api_key_env, "")
            if not key:
                raise AuthError(
                    endpoint.endpoint_id,
                    f"environment variable {endpoint.api_key_env} is not set",
                )
            headers["Authorization"] = f"Bearer {key}"
        messages = []
        if endpoint.system:
            messages.append({"role": "system", "content": endpoint.system})
        messages.append({"role": "user", "content": req.prompt})
        payload = {
            "model": endpoint.model,
            "messages": messages,
            "temperature": req.temperature,
            "n": req.n_samples,
            "max_tokens": req.max_tokens,
        }
        if req.seed is not None:
            payload["seed"] = req.seed
        url = endpoint.base_url.rstrip("/") + "/v1/chat/completions"
        try:
            status, body = self._transport(url, headers, payload, self._timeout)
        except (httpx.TimeoutException, httpx.TransportError) as exc:
            raise TransientBackendError(str(exc)) from exc
        if status in (401, 403):
            raise AuthError(endpoint.endpoint_id, f"HTTP {status}")
        if status in RETRYABLE_STATUSES:
            raise TransientBackendError(f"HTTP {status}")
        if status != 200:
            raise EndpointError(endpoint.endpoint_id, f"HTTP {status}")
        choices = body.get("choices", [])
        texts = [c.get("message", {}).get("content", "") for c in choices]
        if len(texts) != req.n_samples:
            raise EndpointError(
                endpoint.endpoint_id,
                f"expected {req.n_samples} choices, got {len(texts)}",
            )
        return texts


_SCRIPT_KEYS = {"responses", "by_prompt_sha256", "default"}


def load_mock_script(path: str | Path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MockScriptError(f"mock script {path}: invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise MockScriptError(f"mock script {path}: top level must be an object")
    return data


class ScriptedBackend:
    """Deterministic mock backend driven by a script.

    A script is either one section or a map endpoint_id -> section. A section
    maps request ordinal (`responses`: nth entry for the nth request on that
    endpoint) or `by_prompt_sha256` to a list of completions; `default`
    catches everything else. Records served prompts and peak concurrency for
    test instrumentation.
    """

    def __init__(self, script: dict, delay: float = 0.0) -> None:
        self._script = script
        self._delay = delay
        self._lock = threading.Lock()
        self._in_flight = 0
        self.peak_in_flight = 0
        self.prompts: list[tuple[str, str]] = []

    def _section(self, endpoint_id: str) -> dict:
        if _SCRIPT_KEYS & set(self._script):
            return self._script
        section = self._script.get(endpoint_id)
        if section is None:
            raise MockScriptError(f"mock script has no section for endpoint {endpoint_id!r}")
        return section

    def generate(self, endpoint: EndpointConfig, req: CompletionRequest, ordinal: int) -> list[str]:
        with self._lock:
            self._in_flight += 1
            self.peak_in_flight = max(self.peak_in_flight, self._in_flight)
            self.prompts.append((endpoint.endpoint_id, req.prompt))
        try:
            if self._delay:
                time.sleep(self._delay)
            section = self._section(endpoint.endpoint_id)
            entry = None
            by_hash = section.get("by_prompt_sha256", {})
            if by_hash:
                digest = hashlib.sha256(req.prompt.encode("utf-8")).hexdigest()
                entry = by_hash.get(digest)
            if entry is None:
                responses = section.get("responses", [])
                if ordinal < len(responses):
                    entry = responses[ordinal]
            if entry is None:
                entry = section.get("default")
            if entry is None:
                raise MockScriptError(
                    f"mock script exhausted for endpoint {endpoint.endpoint_id!r} "
                    f"(request ordinal {ordinal})"
                )
            texts = [entry] if isinstance(entry, str) else list(entry)
            if len(texts) < req.n_samples:
                raise MockScriptError(
                    f"scripted entry for {endpoint.endpoint_id!r} ordinal {ordinal} has "
                    f"{len(texts)} completions, request wants {req.n_samples}"
                )
            return texts[: req.n_samples]
        finally:
            with self._lock:
                self._in_flight -= 1


class Gateway:
    """Shareable client enforcing retries, a request budget, and the
    max-in-flight bound. Batch results align positionally with requests."""

    def __init__(
        self,
        registry: EndpointRegistry,
        backend,
        max_attempts: int = 5,
        backoff_base: float = 1.0,
        budget: int | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self._registry = registry
        self._backend = backend
        self._max_attempts = max_attempts
        self._backoff_base = backoff_base
        self._budget = budget
        self._sleep = sleep
        self._jitter = random.Random()
        self._lock = threading.Lock()
        self._requests_made = 0
        self._ordinals: dict[str, int] = {}

    @property
    def backend(self):
        return self._backend

    @property
    def registry(self) -> EndpointRegistry:
        return self._registry

    @property
    def requests_made(self) -> int:
        return self._requests_made

    def _validate(self, req: CompletionRequest) -> None:
        if req.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not 0.0 <= req.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if req.temperature == 0.0 and req.n_samples != 1:
            raise ValueError("temperature 0 implies a single sample")

    def _next_ordinal(self, endpoint_id: str) -> int:
        with self._lock:
            ordinal = self._ordinals.get(endpoint_id, 0)
            self._ordinals[endpoint_id] = ordinal + 1
            return ordinal

    def _spend(self) -> None:
        with self._lock:
            if self._budget is not None and self._requests_made >= self._budget:
                raise BudgetExceeded(self._budget)
            self._requests_made += 1

    def complete(self, req: CompletionRequest) -> CompletionResult:
        self._validate(req)
        return self._complete_at(req, self._next_ordinal(req.endpoint_id))

    def _complete_at(self, req: CompletionRequest, ordinal: int) -> CompletionResult:
        endpoint = self._registry.get(req.endpoint_id)
        started = time.monotonic()
        last_failure = ""
        for attempt in range(1, self._max_attempts + 1):
            self._spend()
            try:
                texts = self._backend.generate(endpoint, req, ordinal)
                return CompletionResult(
                    texts=texts,
                    endpoint_id=req.endpoint_id,
                    latency=time.monotonic() - started,
                    attempt_count=attempt,
                )
            except TransientBackendError as exc:
                last_failure = str(exc)
                if attempt < self._max_attempts:
                    delay = self._backoff_base * (2 ** (attempt - 1))
                    self._sleep(delay * self._jitter.uniform(0.8, 1.2))
        raise EndpointError(req.endpoint_id, last_failure, attempts=self._max_attempts)

    def complete_batch(
        self, reqs: list[CompletionRequest], max_in_flight: int = 8
    ) -> list[CompletionResult | HadkitError]:
        """Run requests with at most `max_in_flight` outstanding; per-request
        failures come back as error values in their slot."""
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        for req in reqs:
            self._validate(req)
        # Ordinals are reserved in input order before dispatch so scripted
        # backends see a schedule-independent mapping.
        ordinals = [self._next_ordinal(req.endpoint_id) for req in reqs]

        def run(pair) -> CompletionResult | HadkitError:
            req, ordinal = pair
            try:
                return self._complete_at(req, ordinal)
            except HadkitError as exc:
                return exc

        if not reqs:
            return []
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            return list(pool.map(run, zip(reqs, ordinals)))
