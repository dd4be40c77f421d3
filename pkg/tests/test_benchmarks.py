import json

import pytest

from hadkit.benchmarks import BENCHMARKS, get_spec, ingest, score
from hadkit.detection import DetectionResult
from hadkit.errors import AlignmentError, SchemaError
from hadkit.taxonomy import Label, LabelKind


def _write(tmp_path, name, items):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(items), encoding="utf-8")
    return path


def synthetic_items(name, n=10):
    """Ten items in the upstream schema; even indices hallucinated."""
    items = []
    for i in range(n):
        hallucinated = i % 2 == 0
        flag = "yes" if hallucinated else "no"
        if name == "halueval_qa":
            items.append(
                {"knowledge": f"K{i}", "question": f"Q{i}", "answer": f"A{i}", "hallucination": flag}
            )
        elif name == "halueval_dial":
            items.append(
                {
                    "knowledge": f"K{i}",
                    "dialogue_history": f"[Human]: hi {i}",
                    "response": f"R{i}",
                    "hallucination": flag,
                }
            )
        elif name == "halueval_summ":
            items.append({"document": f"D{i}", "summary": f"S{i}", "hallucination": flag})
        elif name == "halueval_gen":
            items.append(
                {"user_query": f"Q{i}", "chatgpt_response": f"R{i}", "hallucination": flag}
            )
        elif name == "factchd":
            items.append(
                {
                    "question": f"Q{i}",
                    "claim": f"C{i}",
                    "label": "NON-FACTUAL" if hallucinated else "FACTUAL",
                }
            )
        elif name == "faithbench":
            items.append(
                {
                    "source": f"D{i}",
                    "summary": f"S{i}",
                    "annotations": [{"label": "hallucinated"}] if hallucinated else [],
                }
            )
    return items


def gold_as_predictions(records):
    return [
        (rec.id, DetectionResult(predicted=rec.label, span="", correction="", raw=""))
        for rec in records
    ]


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_ingest_counts_and_labels(tmp_path, name):
    path = _write(tmp_path, name, synthetic_items(name))
    records = ingest(get_spec(name), path)
    assert len(records) == 10
    for i, rec in enumerate(records):
        expected = LabelKind.BINARY_HALLUCINATED if i % 2 == 0 else LabelKind.NO_HALLUCINATION
        assert rec.label.kind is expected
        assert rec.span == "" and rec.correction == ""


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
def test_self_scoring_is_perfect(tmp_path, name):
    spec = get_spec(name)
    records = ingest(spec, _write(tmp_path, name, synthetic_items(name)))
    report = score(spec, records, gold_as_predictions(records))
    if spec.metric == "accuracy":
        assert report["accuracy"] == 1.0
    elif spec.metric == "micro_f1_positive":
        assert report["micro_f1_positive"] == 1.0
    else:
        assert report["balanced_accuracy"] == 1.0
        assert report["macro_f1"] == 1.0


def test_summarization_context_precedes_query(tmp_path):
    spec = get_spec("faithbench")
    records = ingest(spec, _write(tmp_path, "faithbench", synthetic_items("faithbench", 2)))
    task_input = records[0].task_input
    assert task_input.startswith("D0")
    assert task_input.index("D0") < task_input.index("Summarize")
    assert records[0].output == "S0"


def test_halueval_qa_query_contains_knowledge_and_question(tmp_path):
    spec = get_spec("halueval_qa")
    records = ingest(spec, _write(tmp_path, "halueval_qa", synthetic_items("halueval_qa", 2)))
    assert records[0].task_input == "K0\nQ0"


def test_malformed_item_reports_index(tmp_path):
    items = synthetic_items("halueval_qa", 3)
    del items[1]["answer"]
    path = _write(tmp_path, "halueval_qa", items)
    with pytest.raises(SchemaError) as err:
        ingest(get_spec("halueval_qa"), path)
    assert err.value.line == 1


def test_bad_flag_rejected(tmp_path):
    items = synthetic_items("halueval_qa", 1)
    items[0]["hallucination"] = "maybe"
    with pytest.raises(SchemaError):
        ingest(get_spec("halueval_qa"), _write(tmp_path, "halueval_qa", items))


def test_factchd_bad_label_rejected(tmp_path):
    items = synthetic_items("factchd", 1)
    items[0]["label"] = "UNKNOWN"
    with pytest.raises(SchemaError):
        ingest(get_spec("factchd"), _write(tmp_path, "factchd", items))


def test_factchd_toy_micro_f1(tmp_path):
    spec = get_spec("factchd")
    items = [
        {"question": "q0", "claim": "c0", "label": "NON-FACTUAL"},
        {"question": "q1", "claim": "c1", "label": "NON-FACTUAL"},
        {"question": "q2", "claim": "c2", "label": "FACTUAL"},
    ]
    records = ingest(spec, _write(tmp_path, "factchd", items))
    preds = [
        (records[0].id, DetectionResult(Label.binary_hallucinated(), "", "", "")),
        (records[1].id, DetectionResult(Label.no_hallucination(), "", "", "")),
        (records[2].id, DetectionResult(Label.binary_hallucinated(), "", "", "")),
    ]
    report = score(spec, records, preds)
    assert report["micro_f1_positive"] == 0.5


def test_faithbench_emits_both_metrics(tmp_path):
    spec = get_spec("faithbench")
    records = ingest(spec, _write(tmp_path, "faithbench", synthetic_items("faithbench", 4)))
    preds = gold_as_predictions(records)
    report = score(spec, records, preds)
    assert set(report) >= {"balanced_accuracy", "macro_f1", "n_items"}


def test_score_alignment_error(tmp_path):
    spec = get_spec("halueval_qa")
    records = ingest(spec, _write(tmp_path, "halueval_qa", synthetic_items("halueval_qa", 2)))
    with pytest.raises(AlignmentError):
        score(spec, records, gold_as_predictions(records)[:1])


def test_jsonl_files_accepted(tmp_path):
    items = synthetic_items("halueval_qa", 3)
    path = tmp_path / "qa.jsonl"
    path.write_text("\n".join(json.dumps(it) for it in items), encoding="utf-8")
    assert len(ingest(get_spec("halueval_qa"), path)) == 3


def test_unknown_benchmark_name():
    with pytest.raises(SchemaError):
        get_spec("halueval_everything")
