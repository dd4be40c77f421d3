import json

import httpx
import pytest

from hadkit.errors import RetrieverError
from hadkit.gateway import EndpointConfig
from hadkit.retrieval import (
    FileRetriever,
    HttpRetriever,
    RetrievalPassage,
    build_query,
    insert_knowledge,
    retriever_for_endpoint,
)


def test_build_query_exact_concatenation():
    assert build_query("Q", "A") == "Q\nA"
    assert build_query("", "A") == "\nA"
    assert build_query("Q", "") == "Q\n"


def test_insert_knowledge_single_passage():
    passage = RetrievalPassage("p1", "<p1>", 1.0)
    assert insert_knowledge("Q", [passage]) == "Background Knowledge:\n<p1>\n\nQ"


def test_insert_knowledge_empty_is_identity():
    assert insert_knowledge("Q", []) == "Q"


def test_insert_knowledge_two_passages_in_order():
    passages = [RetrievalPassage("p1", "first", 2.0), RetrievalPassage("p2", "second", 1.0)]
    text = insert_knowledge("Q", passages)
    assert text == "Background Knowledge:\nfirst\n\nsecond\n\nQ"
    assert text.index("first") < text.index("second")


def test_file_retriever_topk_and_order(tmp_path):
    fixture = tmp_path / "f.json"
    fixture.write_text(
        json.dumps(
            {
                "Q\nA": [
                    {"id": "low", "text": "t1", "score": 0.1},
                    {"id": "high", "text": "t2", "score": 0.9},
                ]
            }
        ),
        encoding="utf-8",
    )
    retriever = FileRetriever(fixture)
    top1 = retriever.retrieve("Q\nA", 1)
    assert [p.passage_id for p in top1] == ["high"]
    top2 = retriever.retrieve("Q\nA", 2)
    assert [p.passage_id for p in top2] == ["high", "low"]
    assert retriever.retrieve("unknown", 1) == []


def test_http_retriever_parses_passages(monkeypatch):
    def fake_post(url, json=None, timeout=None):
        assert url.endswith("/retrieve")
        assert json == {"query": "q", "k": 2}
        request = httpx.Request("POST", url)
        return httpx.Response(
            200,
            json={"passages": [{"id": "a", "text": "x", "score": 1.0}]},
            request=request,
        )

    monkeypatch.setattr(httpx, "post", fake_post)
    passages = HttpRetriever("http://svc").retrieve("q", 2)
    assert passages == [RetrievalPassage("a", "x", 1.0)]


def test_http_retriever_transport_failure(monkeypatch):
    def fake_post(url, json=None, timeout=None):
        raise httpx.ConnectError("refused")

    monkeypatch.setattr(httpx, "post", fake_post)
    with pytest.raises(RetrieverError):
        HttpRetriever("http://svc").retrieve("q", 1)


def test_http_retriever_bad_status(monkeypatch):
    def fake_post(url, json=None, timeout=None):
        return httpx.Response(500, request=httpx.Request("POST", url))

    monkeypatch.setattr(httpx, "post", fake_post)
    with pytest.raises(RetrieverError):
        HttpRetriever("http://svc").retrieve("q", 1)


def test_retriever_for_endpoint_dispatch(tmp_path):
    fixture = tmp_path / "f.json"
    fixture.write_text("{}", encoding="utf-8")
    assert isinstance(
        retriever_for_endpoint(EndpointConfig("wiki", fixture=str(fixture))), FileRetriever
    )
    assert isinstance(
        retriever_for_endpoint(EndpointConfig("wiki", base_url="http://x")), HttpRetriever
    )
    with pytest.raises(RetrieverError):
        retriever_for_endpoint(EndpointConfig("wiki"))
