import json

import pytest

from hadkit.corpus import (
    DEFAULT_POSITIVE_FRACTION,
    DEFAULT_TRAINING_TARGETS,
    assemble_balanced,
    largest_remainder,
    load_records,
    load_sources,
    ratio_sample,
    round_half_up,
    save_records,
    save_sources,
    stats,
)
from hadkit.corpus import SourceRecord
from hadkit.errors import InsufficientPositives, PoolTooSmall, SchemaError
from hadkit.taxonomy import Label

from conftest import make_record, make_source


def test_save_load_round_trip(tmp_path):
    records = [make_record(1, "FE"), make_record(2, None), make_record(3, "SI", span="flowered")]
    records[0].extras["custom_field"] = {"nested": [1, 2]}
    path = tmp_path / "r.jsonl"
    save_records(records, path)
    loaded = load_records(path)
    assert loaded == records


def test_round_trip_preserves_unicode_and_markers(tmp_path):
    rec = make_record(1, "FA", span="naïve **bold** claim\nover two lines")
    rec.output = "naïve **bold** claim\nover two lines — 日本語テキスト"
    rec.span = "naïve **bold** claim\nover two lines"
    rec.correction = "corrected — 日本語"
    path = tmp_path / "u.jsonl"
    save_records([rec], path)
    assert load_records(path) == [rec]


def test_load_missing_field_reports_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = {
        "id": "a", "source_id": "s", "task_kind": "lfqa", "task_input": "q", "output": "o",
        "label": "Fabricated Entity", "span": "o", "correction": "c",
        "provenance": {"generator_model": "", "temperature": 0.0, "candidate_index": 0, "injected_at": ""},
        "status": "raw",
    }
    bad = {k: v for k, v in good.items() if k != "output"}
    bad["id"] = "b"
    path.write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError) as err:
        load_records(path)
    assert err.value.line == 2


def test_load_invalid_json_reports_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("{not json}\n", encoding="utf-8")
    with pytest.raises(SchemaError) as err:
        load_records(path)
    assert err.value.line == 1


def test_empty_file_loads_empty(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    assert load_records(path) == []


def test_negative_record_with_span_rejected(tmp_path):
    rec = make_record(1, None)
    rec.span = "oops"
    with pytest.raises(SchemaError):
        save_records([rec], tmp_path / "x.jsonl")


def test_typed_record_requires_span():
    rec = make_record(1, "FE")
    rec.span = ""
    with pytest.raises(SchemaError):
        save_records([rec], "/dev/null")


def test_status_transitions_monotone():
    rec = make_record(1, "FE")
    rec.advance_status("filtered_pass")
    rec.advance_status("annotated_pass")
    with pytest.raises(SchemaError):
        rec.advance_status("raw")


def test_sources_round_trip_and_duplicate_id(tmp_path):
    sources = [make_source(1), make_source(2)]
    path = tmp_path / "s.jsonl"
    save_sources(sources, path)
    assert load_sources(path) == sources
    path.write_text(
        "\n".join(
            json.dumps({"id": "dup", "task_kind": "lfqa", "task_input": "q", "gold_output": "a"})
            for _ in range(2)
        ),
        encoding="utf-8",
    )
    with pytest.raises(SchemaError):
        load_sources(path)


def test_round_half_up():
    assert round_half_up(1.5) == 2
    assert round_half_up(1.49) == 1
    assert round_half_up(0.5) == 1
    assert round_half_up(2.0) == 2


def test_largest_remainder_exact_and_rounded():
    assert largest_remainder(4, {"a": 2, "b": 2}) == {"a": 2, "b": 2}
    alloc = largest_remainder(5, {"a": 1, "b": 1, "c": 1})
    assert sum(alloc.values()) == 5
    assert sorted(alloc.values()) == [1, 2, 2]
    assert largest_remainder(0, {"a": 3}) == {"a": 0}


def test_assemble_balanced_mirrors_distribution():
    hallu = [
        make_record(1, "IO", kind="summarization"),
        make_record(2, "IO", kind="summarization"),
        make_record(3, "FE", kind="lfqa"),
        make_record(4, "FA", kind="lfqa"),
    ]
    pool = [make_source(i, "summarization") for i in range(10)] + [
        make_source(i + 100, "lfqa") for i in range(10)
    ]
    out = assemble_balanced(hallu, pool, seed=7)
    assert len(out) == 8
    positives = [r for r in out if r.label == Label.no_hallucination()]
    assert len(positives) == 4
    by_kind = {}
    for rec in positives:
        by_kind[rec.task_kind] = by_kind.get(rec.task_kind, 0) + 1
    assert by_kind == {"summarization": 2, "lfqa": 2}
    for rec in positives:
        assert rec.span == "" and rec.correction == ""
        src = next(s for s in pool if s.id == rec.source_id)
        assert rec.output == src.gold_output


def test_assemble_balanced_empty_and_deterministic():
    assert assemble_balanced([], [], seed=1) == []
    hallu = [make_record(i, "IO") for i in range(3)]
    pool = [make_source(i) for i in range(30)]
    first = assemble_balanced(hallu, pool, seed=5)
    second = assemble_balanced(hallu, pool, seed=5)
    assert [r.id for r in first] == [r.id for r in second]


def test_assemble_balanced_insufficient_names_kind():
    hallu = [make_record(1, "IO", kind="dialogue")]
    with pytest.raises(InsufficientPositives) as err:
        assemble_balanced(hallu, [make_source(1, "summarization")], seed=0)
    assert err.value.kind == "dialogue"


def _typed_pool(type_id, kind, n):
    return [make_record(i + hash(type_id) % 50, type_id, kind=kind) for i in range(n)]


def test_ratio_sample_round_half_up_totals():
    pools = {
        "FE": [make_record(i, "FE", kind="lfqa") for i in range(5)],
        "IO": [make_record(i + 10, "IO", kind="summarization") for i in range(5)],
    }
    positives = [make_source(i, "lfqa") for i in range(10)] + [
        make_source(i + 50, "summarization") for i in range(10)
    ]
    out = ratio_sample(pools, {"FE": 2, "IO": 1}, positives, positive_fraction=0.5, seed=3)
    # 3 hallucinated + round_half_up(1.5) = 2 positives
    assert len(out) == 5
    assert sum(1 for r in out if r.label == Label.no_hallucination()) == 2


def test_ratio_sample_zero_fraction():
    pools = {"FE": [make_record(i, "FE", kind="lfqa") for i in range(4)]}
    out = ratio_sample(pools, {"FE": 3}, [], positive_fraction=0.0, seed=1)
    assert len(out) == 3
    assert all(r.label == Label.of_type("FE") for r in out)


def test_ratio_sample_pool_too_small():
    with pytest.raises(PoolTooSmall):
        ratio_sample({"FE": [make_record(1, "FE")]}, {"FE": 2}, [], seed=0)


def test_default_profile_positive_ratio():
    kind_for = {
        "FRE": "lfqa", "FIE": "lfqa", "FE": "lfqa", "FA": "lfqa",
        "CwIC": "summarization", "BI": "summarization", "IO": "summarization",
        "TTI": "paraphrasing", "TRI": "paraphrasing", "CwOC": "paraphrasing", "SI": "paraphrasing",
    }
    pools = {}
    n = 0
    for type_id, target in DEFAULT_TRAINING_TARGETS.items():
        pool = []
        for _ in range(target):
            rec = make_record(n, type_id, kind=kind_for[type_id])
            rec.id = f"rec-{n:06d}"
            pool.append(rec)
            n += 1
        pools[type_id] = pool
    positives = []
    for offset, kind in enumerate(("lfqa", "summarization", "paraphrasing")):
        for i in range(20000):
            positives.append(
                SourceRecord(f"pool-{offset}-{i:05d}", kind, f"input {kind} {i}", f"gold {i}")
            )
    out = ratio_sample(pools, DEFAULT_TRAINING_TARGETS, positives,
                       positive_fraction=DEFAULT_POSITIVE_FRACTION, seed=1)
    n_hallu = sum(DEFAULT_TRAINING_TARGETS.values())
    n_pos = len(out) - n_hallu
    assert abs(n_pos / n_hallu - 0.5) <= 1 / n_hallu  # 0.5 up to rounding
    pos_kinds = {}
    for rec in out[n_hallu:]:
        pos_kinds[rec.task_kind] = pos_kinds.get(rec.task_kind, 0) + 1
    assert pos_kinds["lfqa"] == 18000  # 36000/61000 of 30500
    assert pos_kinds["summarization"] == 7500
    assert pos_kinds["paraphrasing"] == 5000


def test_ratio_sample_permutation_insensitive():
    pool = [make_record(i, "FE", kind="lfqa") for i in range(8)]
    positives = [make_source(i, "lfqa") for i in range(8)]
    forward = ratio_sample({"FE": pool}, {"FE": 4}, positives, seed=11)
    backward = ratio_sample({"FE": list(reversed(pool))}, {"FE": 4}, list(reversed(positives)), seed=11)
    assert [r.id for r in forward] == [r.id for r in backward]


def test_stats_counts(taxonomy):
    records = [make_record(1, "FE"), make_record(2, "FE"), make_record(3, None)]
    result = stats(records, taxonomy)
    assert result.total == 3
    assert result.positives == 2
    assert result.negatives == 1
    assert result.per_type == {"Fabricated Entity": 2}
    assert result.per_task == {"summarization": 3}


def test_stats_empty():
    result = stats([])
    assert result.total == 0 and result.positives == 0 and result.negatives == 0
    assert result.per_type == {} and result.per_task == {}
