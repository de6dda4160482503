"""HTTP API for annotation rounds, plus static hosting for the workbench UI.

All figures the UI displays (progress, kappa, disagreements) are computed
here; the browser never derives them locally.
"""

from __future__ import annotations

import logging
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .annosvc import AnnotationRecord, AnnotationRound, ContextFinder, attach_context
from .curation import save_labels
from .errors import (
    AuthorizationError,
    CollexError,
    IncompleteAdjudicationError,
    PairNotFoundError,
    ValidationError,
)

log = logging.getLogger(__name__)

TOKEN_HEADER = "X-Collex-Token"


class LabelBody(BaseModel):
    pair_id: str
    annotator_id: str
    label: int


class AdjudicationBody(BaseModel):
    pair_id: str
    label: int
    note: str = ""


def _http_status(exc: CollexError) -> int:
    if isinstance(exc, AuthorizationError):
        return 403
    if isinstance(exc, PairNotFoundError):
        return 404
    if isinstance(exc, ValidationError):
        return 422
    if isinstance(exc, IncompleteAdjudicationError):
        return 409
    return 400


def create_app(
    rounds: dict[int, AnnotationRound],
    finder: ContextFinder | None = None,
    token: str | None = None,
    ui_dir: str | Path | None = None,
    labels_export_dir: str | Path | None = None,
    context_seed: int = 0,
) -> FastAPI:
    app = FastAPI(title="collex annotation service")

    def check_token(x_collex_token: str | None = Header(default=None)) -> None:
        if token and x_collex_token != token:
            raise HTTPException(status_code=401, detail="missing or wrong token")

    auth = [Depends(check_token)]

    @app.exception_handler(CollexError)
    async def collex_error_handler(_req: Request, exc: CollexError):
        return JSONResponse(
            status_code=_http_status(exc),
            content={"error": str(exc), "kind": exc.kind},
        )

    def get_round(round_no: int) -> AnnotationRound:
        rnd = rounds.get(round_no)
        if rnd is None:
            raise HTTPException(status_code=404, detail=f"no round {round_no}")
        return rnd

    def task_payload(rnd: AnnotationRound, pair_id: str, annotator_id: str | None = None) -> dict:
        task = rnd.tasks[pair_id]
        if finder is not None and not task.context_tweets:
            task = attach_context(task, finder, seed=context_seed)
            rnd.tasks[pair_id] = task
        doc = asdict(task)
        doc["round"] = rnd.round_no
        if annotator_id is not None:
            doc["current_label"] = rnd.labels.get((pair_id, annotator_id))
        return doc

    @app.get("/api/rounds", dependencies=auth)
    def list_rounds():
        return {"rounds": sorted(rounds)}

    @app.get("/api/rounds/{round_no}/next", dependencies=auth)
    def next_task(round_no: int, annotator: str):
        rnd = get_round(round_no)
        task = rnd.next_task(annotator)
        if task is None:
            remaining = 0
        else:
            remaining = sum(
                1
                for t in rnd.tasks_for(annotator)
                if (t.pair_id, annotator) not in rnd.labels
            )
        return {
            "task": None if task is None else task_payload(rnd, task.pair_id, annotator),
            "remaining": remaining,
        }

    @app.post("/api/labels", dependencies=auth)
    def post_label(body: LabelBody):
        for rnd in rounds.values():
            if body.pair_id in rnd.tasks:
                record = AnnotationRecord(
                    pair_id=body.pair_id,
                    annotator_id=body.annotator_id,
                    label=body.label,
                    timestamp=datetime.now(timezone.utc).isoformat(),
                )
                rnd.record_label(record)
                return {"ok": True, "progress": rnd.progress()}
        raise PairNotFoundError(f"unknown pair {body.pair_id!r}")

    @app.get("/api/pairs/{pair_id}/context", dependencies=auth)
    def pair_context(pair_id: str):
        for rnd in rounds.values():
            if pair_id in rnd.tasks:
                return {"pair_id": pair_id,
                        "context_tweets": task_payload(rnd, pair_id)["context_tweets"]}
        raise PairNotFoundError(f"unknown pair {pair_id!r}")

    @app.get("/api/rounds/{round_no}/progress", dependencies=auth)
    def progress(round_no: int):
        return get_round(round_no).progress()

    @app.get("/api/rounds/{round_no}/kappa", dependencies=auth)
    def kappa(round_no: int):
        return get_round(round_no).kappa_by_set()

    @app.get("/api/rounds/{round_no}/disagreements", dependencies=auth)
    def disagreements(round_no: int):
        rnd = get_round(round_no)
        items = rnd.disagreements()
        return {
            "disagreements": items,
            "unresolved": rnd.unresolved(),
            "closeable": not rnd.unresolved()
            and all(None not in rnd.pair_labels(p) for p in rnd.tasks),
        }

    @app.post("/api/rounds/{round_no}/adjudicate", dependencies=auth)
    def adjudicate_pair(round_no: int, body: AdjudicationBody):
        rnd = get_round(round_no)
        rnd.record_adjudication(body.pair_id, body.label, body.note)
        return {"ok": True, "unresolved": rnd.unresolved()}

    @app.post("/api/rounds/{round_no}/close", dependencies=auth)
    def close_round(round_no: int):
        rnd = get_round(round_no)
        labels = rnd.final_labels()
        exported = None
        if labels_export_dir is not None:
            out = Path(labels_export_dir) / f"round-{round_no}-labels.tsv"
            save_labels(out, labels)
            exported = str(out)
        return {
            "round": round_no,
            "labels": [
                {"lemma": l, "concept_id": c, "final_label": v} for l, c, v in labels
            ],
            "exported": exported,
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
