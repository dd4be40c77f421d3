"""Knowledge augmentation: query building, passage retrieval from an external
dense-retrieval HTTP service (or a file-backed mock), and insertion of the
passages into task inputs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import httpx

from .errors import RetrieverError, SchemaError
from .gateway import EndpointConfig

KNOWLEDGE_HEADER = "Background Knowledge:"
DEFAULT_TOP_K = 1


@dataclass(frozen=True)
class RetrievalPassage:
    passage_id: str
    text: str
    score: float


def build_query(task_input: str, task_output: str) -> str:
    """The retrieval query is the task input and output joined by a newline."""
    return task_input + "\n" + task_output


def insert_knowledge(task_input: str, passages: Sequence[RetrievalPassage]) -> str:
    """Prepend retrieved passages to the task input; a no-op without passages."""
    if not passages:
        return task_input
    body = "\n\n".join(p.text for p in passages)
    return f"{KNOWLEDGE_HEADER}\n{body}\n\n{task_input}"


def _sorted_topk(passages: list[RetrievalPassage], k: int) -> list[RetrievalPassage]:
    return sorted(passages, key=lambda p: -p.score)[:k]


class FileRetriever:
    """Mock retriever backed by a JSON fixture mapping query -> passages."""

    def __init__(self, path: str | Path) -> None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"retriever fixture {path}: invalid JSON: {exc.msg}") from exc
        self._index: dict[str, list[RetrievalPassage]] = {}
        for query, items in data.items():
            self._index[query] = [
                RetrievalPassage(str(it["id"]), it["text"], float(it.get("score", 0.0)))
                for it in items
            ]

    def retrieve(self, query: str, k: int = DEFAULT_TOP_K) -> list[RetrievalPassage]:
        return _sorted_topk(list(self._index.get(query, [])), k)


class HttpRetriever:
    """POST /retrieve {query, k} -> {passages: [{id, text, score}]}."""

    def __init__(self, base_url: str, timeout: float = 30.0) -> None:
        self._base_url = base_url.rstrip("/")
        self._timeout = timeout

    def retrieve(self, query: str, k: int = DEFAULT_TOP_K) -> list[RetrievalPassage]:
        try:
            response = httpx.post(
                self._base_url + "/retrieve",
                json={"query": query, "k": k},
                timeout=self._timeout,
            )
        except httpx.HTTPError as exc:
            raise RetrieverError(f"retriever transport failure: {exc}") from exc
        if response.status_code != 200:
            raise RetrieverError(f"retriever returned HTTP {response.status_code}")
        try:
            items = response.json().get("passages", [])
        except ValueError as exc:
            raise RetrieverError("retriever returned a non-JSON body") from exc
        passages = [
            RetrievalPassage(str(it["id"]), it["text"], float(it.get("score", 0.0)))
            for it in items
        ]
        return _sorted_topk(passages, k)


def retriever_for_endpoint(endpoint: EndpointConfig):
    """A retriever client for a registry entry: file-backed when the entry
    names a fixture, HTTP otherwise."""
    if endpoint.fixture:
        return FileRetriever(endpoint.fixture)
    if not endpoint.base_url:
        raise RetrieverError(
            f"retriever endpoint {endpoint.endpoint_id} has neither base_url nor fixture"
        )
    return HttpRetriever(endpoint.base_url)
