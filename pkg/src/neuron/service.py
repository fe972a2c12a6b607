"""HTTP facade over the narration pipeline.

Sessions are held in process memory and expire after an idle TTL. Each
narrated plan is stored under a deterministic content hash of its raw
text, so re-submitting the same plan lands on the same plan_id. The
narrate responses are serialized by serialize_json() below; the CLI uses
the same function so both surfaces emit byte-identical payloads.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .answer_generator import PlanContext, dispatch, display_node_type
from .definition_index import InvertedIndex, build_index, load_corpus
from .errors import (
    AmbiguousStepReference,
    BadRequest,
    NeuronError,
    NoDefinitionFound,
    NoLiveConnection,
    NoRuntimeStats,
    NoStepReference,
    UnknownPlan,
    UnknownSession,
    UnknownStep,
)
from .plan_ingest import PlanSource, connect, fetch_plan, fetch_schema, parse_explain_json
from .question_processor import NBModel, load_training, train_classifier
from .vocalizer import TTSConfig, synthesize

DEFAULT_PORT = 8964
STATIC_ENV = "NEURON_STATIC"

_STATUS_BY_CODE = {
    "bad_request": 400,
    "empty_input": 400,
    "malformed_plan": 400,
    "query_error": 400,
    "unsupported_shape": 400,
    "unknown_session": 404,
    "unknown_plan": 404,
    "unknown_step": 404,
    "no_live_connection": 409,
    "feature_disabled": 501,
    "connection_failure": 502,
    "tts_unavailable": 502,
}

# Submodule failures the QA panel reports as a normal prose reply.
_QA_PROSE_ERRORS = (
    NoStepReference,
    AmbiguousStepReference,
    NoDefinitionFound,
    UnknownStep,
    NoRuntimeStats,
)


@dataclass
class Session:
    session_id: str
    connection: Any = None
    plans: dict = field(default_factory=dict)
    created_at: float = field(default_factory=time.monotonic)
    last_access: float = field(default_factory=time.monotonic)


class SessionStore:
    """Shared session map: exclusive mutation, TTL eviction on access."""

    def __init__(self, ttl_s: float = 1800.0):
        self.ttl_s = ttl_s
        self._lock = threading.RLock()
        self._sessions: dict[str, Session] = {}

    def create(self, connection: Any = None) -> Session:
        session = Session(session_id=uuid.uuid4().hex, connection=connection)
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        now = time.monotonic()
        with self._lock:
            self._evict(now)
            session = self._sessions.get(session_id)
            if session is None:
                raise UnknownSession("Unknown or expired session.")
            session.last_access = now
            return session

    def _evict(self, now: float) -> None:
        stale = [
            sid
            for sid, s in self._sessions.items()
            if now - s.last_access > self.ttl_s
        ]
        for sid in stale:
            conn = self._sessions.pop(sid).connection
            if conn is not None:
                try:
                    conn.close()
                except Exception:
                    pass


def plan_content_id(plan_text: str) -> str:
    return hashlib.sha256(plan_text.encode("utf-8")).hexdigest()[:16]


def serialize_json(payload: Any) -> bytes:
    """The one JSON serializer for narrate payloads; CLI and HTTP share it."""
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":")).encode(
        "utf-8"
    )


def narration_payload(plan_id: str, ctx: PlanContext) -> dict:
    steps = []
    for step in ctx.script.steps:
        steps.append(
            {
                "step_id": step.step_id,
                "text": step.text,
                "output_label": step.output_label,
                "node_type": display_node_type(step.node),
                "actual_rows": step.node.actual_rows,
                "actual_loops": step.node.actual_loops,
                "inclusive_ms": step.inclusive_time_ms,
                "exclusive_ms": step.exclusive_time_ms,
                "exclusive_clamped": step.exclusive_clamped,
            }
        )
    return {
        "plan_id": plan_id,
        "final_label": ctx.script.final_label,
        "steps": steps,
        "raw_plan": ctx.raw.plan_text,
    }


def answer_payload_dict(payload: Any) -> Optional[dict]:
    if payload is None:
        return None
    return {k: v for k, v in vars(payload).items()}


@dataclass
class ServiceState:
    store: SessionStore
    model: NBModel
    index: InvertedIndex
    tts: TTSConfig


def _require(body: dict, key: str) -> str:
    value = body.get(key)
    if not isinstance(value, str) or not value.strip():
        raise BadRequest(f'The request body needs a nonempty string "{key}".')
    return value


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception as exc:
        raise BadRequest("The request body is not valid JSON.") from exc
    if not isinstance(body, dict):
        raise BadRequest("The request body must be a JSON object.")
    return body


def _store_plan(session: Session, raw) -> tuple[str, PlanContext]:
    ctx = PlanContext.from_raw(raw)
    plan_id = plan_content_id(raw.plan_text)
    session.plans[plan_id] = ctx
    return plan_id, ctx


def _get_plan(session: Session, plan_id: str) -> PlanContext:
    ctx = session.plans.get(plan_id)
    if ctx is None:
        raise UnknownPlan("This session has no plan with that id.")
    return ctx


def static_dir() -> Optional[Path]:
    override = os.environ.get(STATIC_ENV)
    if override:
        path = Path(override)
        return path if path.is_dir() else None
    bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return bundled if bundled.is_dir() else None


def create_app(
    session_ttl_s: float = 1800.0,
    cors_origins: Optional[list[str]] = None,
    tts: Optional[TTSConfig] = None,
) -> FastAPI:
    state = ServiceState(
        store=SessionStore(ttl_s=session_ttl_s),
        model=train_classifier(load_training()),
        index=build_index(load_corpus()),
        tts=tts if tts is not None else TTSConfig.from_env(),
    )

    app = FastAPI(openapi_url=None, docs_url=None, redoc_url=None)
    app.state.neuron = state
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(NeuronError)
    async def _neuron_error(_request: Request, exc: NeuronError):
        status = _STATUS_BY_CODE.get(exc.code, 500)
        return JSONResponse(
            status_code=status,
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    @app.post("/api/session")
    async def create_session(request: Request):
        body = await _json_body(request)
        dsn = body.get("dsn")
        connection = None
        if dsn is not None:
            if not isinstance(dsn, str) or not dsn.strip():
                raise BadRequest('"dsn" must be a nonempty string when given.')
            connection = connect(dsn)
        session = state.store.create(connection)
        return {"session_id": session.session_id, "live": connection is not None}

    @app.get("/api/schema")
    async def schema(session_id: str = ""):
        session = state.store.get(session_id)
        if session.connection is None:
            raise NoLiveConnection(
                "This session has no database connection, so there is no schema."
            )
        return fetch_schema(session.connection).to_payload()

    @app.post("/api/narrate")
    async def narrate_sql(request: Request):
        body = await _json_body(request)
        session = state.store.get(str(body.get("session_id", "")))
        sql = _require(body, "sql")
        if session.connection is None:
            raise NoLiveConnection(
                "This session has no database connection; upload a plan file instead."
            )
        analyze = bool(body.get("analyze", True))
        raw = fetch_plan(session.connection, sql, analyze=analyze)
        plan_id, ctx = _store_plan(session, raw)
        return Response(
            content=serialize_json(narration_payload(plan_id, ctx)),
            media_type="application/json",
        )

    @app.post("/api/narrate-file")
    async def narrate_plan_file(request: Request):
        body = await _json_body(request)
        session = state.store.get(str(body.get("session_id", "")))
        plan = body.get("plan")
        if isinstance(plan, (dict, list)):
            plan = json.dumps(plan, ensure_ascii=False)
        if not isinstance(plan, str) or not plan.strip():
            raise BadRequest('The request body needs EXPLAIN JSON under "plan".')
        raw = parse_explain_json(plan, source=PlanSource.FILE)
        plan_id, ctx = _store_plan(session, raw)
        return Response(
            content=serialize_json(narration_payload(plan_id, ctx)),
            media_type="application/json",
        )

    @app.post("/api/qa")
    async def ask(request: Request):
        body = await _json_body(request)
        session = state.store.get(str(body.get("session_id", "")))
        ctx = _get_plan(session, str(body.get("plan_id", "")))
        question = _require(body, "question")
        try:
            answer = dispatch(question, ctx, state.model, state.index)
        except _QA_PROSE_ERRORS as exc:
            return {
                "category": exc.code,
                "answer_text": str(exc),
                "payload": None,
            }
        return {
            "category": answer.category.value,
            "answer_text": answer.text,
            "payload": answer_payload_dict(answer.payload),
        }

    @app.get("/api/plan/{plan_id}/raw")
    async def raw_plan(plan_id: str, session_id: str = ""):
        session = state.store.get(session_id)
        ctx = _get_plan(session, plan_id)
        return Response(content=ctx.raw.plan_text, media_type="application/json")

    @app.get("/api/plan/{plan_id}/step/{step_id}/audio")
    async def step_audio(plan_id: str, step_id: int, session_id: str = ""):
        session = state.store.get(session_id)
        ctx = _get_plan(session, plan_id)
        ctx.step(step_id)
        text = ctx.script.steps[step_id - 1].text
        clip = synthesize(text, state.tts)
        return Response(content=clip.data, media_type=clip.content_type)

    assets = static_dir()
    if assets is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(assets), html=True), name="ui")

    return app


def run_server(port: int = DEFAULT_PORT, **app_kwargs) -> None:
    import uvicorn

    uvicorn.run(create_app(**app_kwargs), host="0.0.0.0", port=port)
