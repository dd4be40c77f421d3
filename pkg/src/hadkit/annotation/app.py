"""HTTP JSON API for the double-annotation workflow.

Errors are returned as {code, message}; optimistic-concurrency conflicts map
to 409 so clients can surface a reload-and-re-review state.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..corpus import SourceRecord, assemble_balanced, save_records
from ..errors import (
    DuplicateJudgment,
    HadkitError,
    InsufficientPositives,
    InvalidState,
    PendingItemsRemain,
    SpanNotInOutput,
    UnknownAnnotator,
    VersionConflict,
)
from ..taxonomy import Taxonomy, default_taxonomy
from .store import AnnotationItem, AnnotationStore

_STATUS_FOR = {
    VersionConflict: 409,
    DuplicateJudgment: 409,
    PendingItemsRemain: 409,
    UnknownAnnotator: 400,
    SpanNotInOutput: 422,
    InvalidState: 422,
    InsufficientPositives: 422,
}


class JudgmentBody(BaseModel):
    verdict: str
    notes: str = ""
    version: int


class EditBody(BaseModel):
    new_output: str
    new_span: str
    version: int


class ExportBody(BaseModel):
    path: str
    balance: bool = False
    seed: int = 0
    force: bool = False


def _item_view(item: AnnotationItem, taxonomy: Taxonomy) -> dict:
    rec = item.record
    return {
        "item_id": rec.id,
        "task_kind": rec.task_kind,
        "task_input": rec.task_input,
        "output": rec.output,
        "span": rec.span,
        "type": taxonomy.label_key(rec.label),
        "span_anchored": rec.span in rec.output if rec.span else False,
        "disposition": item.disposition,
        "judged_by": sorted(item.judgments),
        "version": item.version,
    }


def create_app(
    store: AnnotationStore,
    taxonomy: Taxonomy | None = None,
    token: str | None = None,
    positives: list[SourceRecord] | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    taxonomy = taxonomy or default_taxonomy()
    app = FastAPI(title="hadkit annotation service")

    def require_token(x_annotation_token: str | None = Header(default=None)) -> None:
        if token is not None and x_annotation_token != token:
            raise HTTPException(status_code=401, detail="missing or invalid token")

    auth = [Depends(require_token)]

    @app.exception_handler(HadkitError)
    async def domain_error_handler(request: Request, exc: HadkitError) -> JSONResponse:
        status = _STATUS_FOR.get(type(exc), 400)
        return JSONResponse(
            status_code=status,
            content={"code": type(exc).__name__, "message": str(exc)},
        )

    @app.get("/api/config", dependencies=auth)
    def config() -> dict:
        return {
            "service": "hadkit-annotation",
            "n_items": len(store.items()),
            "balance_available": positives is not None,
        }

    @app.get("/api/taxonomy", dependencies=auth)
    def taxonomy_view() -> dict:
        return {
            "general_criteria": list(taxonomy.general_criteria),
            "types": [
                {
                    "id": e.type_id,
                    "name": e.display_name,
                    "level1": e.level1,
                    "level2": e.level2,
                    "definition": e.definition,
                    "criteria": list(e.criteria),
                }
                for e in taxonomy.entries
            ],
        }

    @app.get("/api/items/next", dependencies=auth)
    def next_item(annotator: str = Query(...)) -> dict:
        item = store.next_item(annotator)
        return {"item": None if item is None else _item_view(item, taxonomy)}

    @app.post("/api/items/{item_id}/judgment", dependencies=auth)
    def submit_judgment(item_id: str, body: JudgmentBody, annotator: str = Query(...)) -> dict:
        item = store.submit_judgment(annotator, item_id, body.verdict, body.notes, body.version)
        return {"item_id": item_id, "disposition": item.disposition, "version": item.version}

    @app.post("/api/items/{item_id}/edit", dependencies=auth)
    def edit_item(item_id: str, body: EditBody, annotator: str = Query(...)) -> dict:
        item = store.edit_item(annotator, item_id, body.new_output, body.new_span, body.version)
        return {"item_id": item_id, "disposition": item.disposition, "version": item.version}

    @app.get("/api/stats", dependencies=auth)
    def stats() -> dict:
        return store.stats().to_dict()

    @app.post("/api/export", dependencies=auth)
    def export(body: ExportBody) -> dict:
        records = store.export(body.path, force=body.force)
        if body.balance:
            if positives is None:
                raise InvalidState("no positives pool configured; start the service with one")
            balanced = assemble_balanced(records, positives, seed=body.seed)
            save_records(balanced, body.path, taxonomy)
            return {"exported": len(balanced), "path": body.path, "balanced": True}
        return {"exported": len(records), "path": body.path, "balanced": False}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
