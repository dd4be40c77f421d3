import pytest

from hadkit.corpus import HalluRecord, Provenance, SourceRecord
from hadkit.taxonomy import Label, default_taxonomy


@pytest.fixture(scope="session")
def taxonomy():
    return default_taxonomy()


def make_source(i: int, kind: str = "summarization") -> SourceRecord:
    return SourceRecord(
        id=f"src-{i:03d}",
        task_kind=kind,
        task_input=f"Summarize document {i}: the plant flowered in spring {i}.",
        gold_output=f"The plant flowered in spring {i}.",
    )


def make_record(
    i: int,
    type_id: str | None = "IO",
    kind: str = "summarization",
    span: str = "in spring",
    status: str = "raw",
) -> HalluRecord:
    label = Label.no_hallucination() if type_id is None else Label.of_type(type_id)
    if type_id is None:
        output = f"The plant flowered in spring {i}."
    else:
        output = f"The plant flowered in spring {i} unexpectedly."
    return HalluRecord(
        id=f"rec-{i:03d}",
        source_id=f"src-{i:03d}",
        task_kind=kind,
        task_input=f"Summarize document {i}.",
        output=output,
        label=label,
        span="" if type_id is None else span,
        correction="" if type_id is None else f"The plant flowered in spring {i}.",
        provenance=Provenance("mock", 1.0, 0, "1970-01-01T00:00:00Z"),
        status=status,
    )
