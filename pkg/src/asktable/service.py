"""HTTP JSON API for asking questions against tables with attention output.

Routes:
  POST /api/ask            answer a question about an inline or bundled table
  GET  /api/tables         bundled sample tables
  GET  /api/test-questions the held-out perturbed test samples
  GET  /health             liveness and model metadata

All state (model, embeddings, test set, sample tables) is loaded once at
startup and never mutated afterwards, so concurrent identical requests
return identical responses. Errors use a uniform envelope
{"error": {"code": ..., "message": ...}}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict

from .core import (
    Example,
    Table,
    TableStructureError,
    read_examples_jsonl,
    reconstruct_table,
    table_to_triples,
    tokenize,
)
from .disambig import DEFAULT_THRESHOLD, EmbeddingTable, disambiguate, load_embeddings
from .evaluation import UNANSWERABLE
from .memnet import MemoryNetwork, load_model
from .resources import (
    default_embeddings_path,
    default_sample_tables_path,
    default_testset_path,
)

TOPK_DEFAULT = 5


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class InlineTable(BaseModel):
    model_config = ConfigDict(extra="forbid")

    columns: list[str]
    rows: list[list[str]]


class AskRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    table: InlineTable | None = None
    table_id: str | None = None
    question: str = ""


@dataclass
class ServiceState:
    """Everything a running service needs; immutable after startup."""

    model: MemoryNetwork | None = None
    embeddings: EmbeddingTable | None = None
    threshold: float = DEFAULT_THRESHOLD
    tables: list[dict] = field(default_factory=list)
    testset: list[Example] = field(default_factory=list)
    webui_dir: Path | None = None


def load_state(
    model_path: str | Path,
    *,
    embeddings_path: str | Path | None = None,
    subwords_path: str | Path | None = None,
    testset_path: str | Path | None = None,
    tables_path: str | Path | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    webui_dir: str | Path | None = None,
) -> ServiceState:
    """Load model and companion files, falling back to packaged defaults."""
    model = load_model(model_path)
    embeddings = load_embeddings(
        embeddings_path or default_embeddings_path(), subwords_path
    )
    testset_file = Path(testset_path) if testset_path else default_testset_path("simple")
    testset = read_examples_jsonl(testset_file) if testset_file.exists() else []
    tables_file = Path(tables_path) if tables_path else default_sample_tables_path()
    tables = json.loads(tables_file.read_text(encoding="utf-8")) if tables_file.exists() else []
    return ServiceState(
        model=model,
        embeddings=embeddings,
        threshold=threshold,
        tables=tables,
        testset=testset,
        webui_dir=Path(webui_dir) if webui_dir else None,
    )


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


def _resolve_table(state: ServiceState, request: AskRequest) -> Table:
    if (request.table is None) == (request.table_id is None):
        raise ApiError(400, "bad_request", "provide exactly one of 'table' or 'table_id'")
    if request.table_id is not None:
        for entry in state.tables:
            if entry.get("table_id") == request.table_id:
                return Table.ingest(entry["columns"], entry["rows"])
        raise ApiError(400, "unknown_table", f"no bundled table with id {request.table_id!r}")
    try:
        return Table.ingest(request.table.columns, request.table.rows)
    except TableStructureError as exc:
        raise ApiError(400, "bad_table", str(exc)) from exc


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="asktable", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def handle_api_error(_: Request, exc: ApiError):
        return _error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(_: Request, exc: RequestValidationError):
        return _error_response(400, "bad_request", str(exc.errors()[:1]))

    @app.get("/health")
    async def health():
        if state.model is None:
            return {"status": "loading", "model_version": None, "vocab_size": None, "hops": None}
        return {
            "status": "ok",
            "model_version": str(state.model.meta.get("model_version", "1")),
            "vocab_size": len(state.model.vocab),
            "hops": state.model.n_hops,
        }

    @app.get("/api/tables")
    async def tables():
        return [
            {
                "table_id": entry["table_id"],
                "columns": entry["columns"],
                "rows": entry["rows"],
            }
            for entry in state.tables
        ]

    @app.get("/api/test-questions")
    async def test_questions():
        if not state.testset:
            raise ApiError(404, "no_testset", "no held-out test set is deployed")
        entries = []
        for example in state.testset:
            table = reconstruct_table(example.triples)
            entries.append(
                {
                    "question": " ".join(example.question),
                    "perturbation": example.perturbation,
                    "expected": example.answer,
                    "adequate": example.adequate,
                    "table": table.to_json_dict(),
                }
            )
        return entries

    @app.post("/api/ask")
    async def ask(request: AskRequest, full: int = Query(default=0)):
        if state.model is None:
            raise ApiError(503, "model_not_loaded", "the model is still loading")
        model = state.model
        if not request.question.strip():
            raise ApiError(400, "empty_question", "question must not be empty")
        table = _resolve_table(state, request)
        triples = table_to_triples(table)
        tokens = tokenize(request.question)
        if not tokens:
            raise ApiError(400, "empty_question", "question contains no usable tokens")
        mapped, report = disambiguate(
            tokens, model.vocab, state.embeddings, threshold=state.threshold
        )
        if not mapped:
            raise ApiError(
                400, "empty_after_disambiguation", "question is empty after disambiguation"
            )
        example = Example(
            triples=tuple(triples),
            question=tuple(mapped),
            answer=UNANSWERABLE,
            adequate=False,
        )
        prediction = model.forward(example)
        distribution = prediction.distribution
        if full:
            order = np.argsort(-distribution, kind="stable")
        else:
            order = np.argsort(-distribution, kind="stable")[:TOPK_DEFAULT]
        topk = [
            {"token": model.vocab.token(int(i)), "probability": float(distribution[int(i)])}
            for i in order
        ]
        return {
            "answer": prediction.answer_token,
            "confidence": prediction.confidence,
            "distribution_topk": topk,
            "attention": [[float(w) for w in row] for row in prediction.attention],
            "triples": [list(t) for t in prediction.memory_slots],
            "disambiguation": [r.to_json_dict() for r in report],
        }

    if state.webui_dir is not None and Path(state.webui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(state.webui_dir), html=True), name="webui")

    return app
