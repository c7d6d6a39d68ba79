"""HTTP facade over the engine: sessions, sub-task submission, keyword
definition, repair actions, and a server-sent event stream.

The API is a pure projection of session state; LLM-bound work runs on a
per-session worker thread so request handlers never block on completions.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .errors import CodeTutorError
from .orchestrator import Engine
from .session import CodeAnswer, ConceptAnswer, Session, SubTask, TaskStatus

API_VERSION = "0.1.0"


def lint_message_id(revision: int, line: int, column: int, rule: str) -> str:
    """Stable id for a lint message so UI clicks survive re-polls."""
    key = f"{revision}:{line}:{column}:{rule}".encode()
    return hashlib.sha256(key).hexdigest()[:12]


def _answer_view(st: SubTask) -> Optional[dict]:
    answer = st.answer
    if isinstance(answer, ConceptAnswer):
        return {
            "type": "concept",
            "explanation": answer.explanation,
            "keywords": [
                {"surface": k.surface, "definition": k.definition}
                for k in answer.keywords
            ],
            "related": [
                {"question": r.question, "answer": r.answer} for r in answer.related
            ],
        }
    if isinstance(answer, CodeAnswer):
        lint = None
        if answer.lint is not None:
            lint = {
                "verdict": answer.lint.verdict,
                "messages": [
                    {
                        "id": lint_message_id(answer.revision, m.line, m.column, m.rule),
                        "line": m.line,
                        "column": m.column,
                        "rule": m.rule,
                        "text": m.text,
                    }
                    for m in answer.lint.messages
                ],
            }
        run = None
        if answer.run is not None:
            run = {
                "verdict": answer.run.verdict,
                "stdout": answer.run.stdout,
                "stderr": answer.run.stderr,
                "err_summary": answer.run.err_summary,
            }
        return {
            "type": "code",
            "code": answer.code,
            "revision": answer.revision,
            "lint": lint,
            "run": run,
            "related": [
                {"question": r.question, "answer": r.answer} for r in answer.related
            ],
        }
    return None


def session_view(session: Session) -> dict:
    subtasks = [
        {
            "id": st.id,
            "text": st.text,
            "kind": st.kind.value,
            "status": st.status.value,
            "elapsed": st.elapsed,
        }
        for st in session.subtasks
    ]
    latest = session.subtasks[-1] if session.subtasks else None
    return {
        "id": session.id,
        "subtasks": subtasks,
        "answer": _answer_view(latest) if latest else None,
        "last_seq": session.last_seq,
    }


@dataclass
class _Holder:
    session: Session
    engine: Engine
    busy: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_error: Optional[str] = None


class SubTaskBody(BaseModel):
    question: str
    force_buildup: bool = False


class RepairBody(BaseModel):
    message_id: Optional[str] = None
    mode: Optional[str] = None  # "Fix" | "Request"
    text: Optional[str] = None


class SessionManager:
    def __init__(self, engine_factory):
        self.engine_factory = engine_factory
        self.sessions: dict[str, _Holder] = {}

    def create(self) -> _Holder:
        engine = self.engine_factory()
        holder = _Holder(session=engine.new_session(), engine=engine)
        self.sessions[holder.session.id] = holder
        return holder

    def get(self, session_id: str) -> Optional[_Holder]:
        return self.sessions.get(session_id)

    def start_job(self, holder: _Holder, work) -> str:
        job_id = uuid.uuid4().hex[:12]

        def runner():
            try:
                work()
            except CodeTutorError as exc:
                holder.last_error = str(exc)
            finally:
                with holder.lock:
                    holder.busy = False

        with holder.lock:
            holder.busy = True
        threading.Thread(target=runner, daemon=True).start()
        return job_id


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(engine_factory) -> FastAPI:
    app = FastAPI(title="codetutor", version=API_VERSION)
    manager = SessionManager(engine_factory)
    app.state.manager = manager

    @app.get("/health")
    def health():
        return {"status": "ok", "version": API_VERSION}

    @app.post("/sessions", status_code=201)
    def create_session():
        holder = manager.create()
        return {"id": holder.session.id}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        holder = manager.get(session_id)
        if holder is None:
            return _error(404, "unknown-session", session_id)
        return session_view(holder.session)

    @app.post("/sessions/{session_id}/subtasks", status_code=202)
    def submit_subtask(session_id: str, body: SubTaskBody):
        holder = manager.get(session_id)
        if holder is None:
            return _error(404, "unknown-session", session_id)
        if holder.busy or holder.session.in_progress() is not None:
            return _error(409, "busy", "a sub-task is already in progress")
        if not body.question.strip():
            return _error(422, "empty-question", "question must be non-empty")
        question = body.question
        force = body.force_buildup
        job_id = manager.start_job(
            holder,
            lambda: holder.engine.handle_subtask(
                holder.session, question, force_buildup=force
            ),
        )
        return {"job_id": job_id}

    @app.post("/sessions/{session_id}/repairs", status_code=202)
    def request_repair(session_id: str, body: RepairBody):
        holder = manager.get(session_id)
        if holder is None:
            return _error(404, "unknown-session", session_id)
        if holder.busy:
            return _error(409, "busy", "a job is already running")
        target_st = next(
            (
                st
                for st in reversed(holder.session.subtasks)
                if isinstance(st.answer, CodeAnswer)
            ),
            None,
        )
        if target_st is None:
            return _error(409, "no-code", "session has no code answer to repair")
        answer = target_st.answer
        if body.message_id is not None:
            if answer.lint is None:
                return _error(422, "unknown-message", body.message_id)
            match = next(
                (
                    m
                    for m in answer.lint.messages
                    if lint_message_id(answer.revision, m.line, m.column, m.rule)
                    == body.message_id
                ),
                None,
            )
            if match is None:
                return _error(422, "unknown-message", body.message_id)
            job_id = manager.start_job(
                holder,
                lambda: holder.engine.repair_lint_loop(
                    holder.session, target_st, answer.code, answer.lint, target=match
                ),
            )
            return {"job_id": job_id}
        if body.mode not in ("Fix", "Request") or not (body.text or "").strip():
            return _error(422, "bad-repair", "need message_id or {mode, text}")
        job_id = manager.start_job(
            holder,
            lambda: holder.engine.repair_runtime(
                holder.session, target_st, body.text, body.mode
            ),
        )
        return {"job_id": job_id}

    @app.post("/sessions/{session_id}/keywords/{surface}/define", status_code=202)
    def define_keyword(session_id: str, surface: str):
        holder = manager.get(session_id)
        if holder is None:
            return _error(404, "unknown-session", session_id)
        if holder.busy:
            return _error(409, "busy", "a job is already running")
        target_st = next(
            (
                st
                for st in reversed(holder.session.subtasks)
                if isinstance(st.answer, ConceptAnswer)
            ),
            None,
        )
        if target_st is None:
            return _error(409, "no-concept", "session has no concept answer")
        if not any(
            k.surface.lower() == surface.lower() for k in target_st.answer.keywords
        ):
            return _error(422, "unknown-keyword", surface)
        job_id = manager.start_job(
            holder,
            lambda: holder.engine.define_keyword(
                holder.session, target_st.id, surface
            ),
        )
        return {"job_id": job_id}

    @app.post("/sessions/{session_id}/accept")
    def accept(session_id: str):
        holder = manager.get(session_id)
        if holder is None:
            return _error(404, "unknown-session", session_id)
        st = holder.session.in_progress()
        if st is None:
            return _error(409, "nothing-pending", "no sub-task awaiting acceptance")
        holder.engine.accept(holder.session)
        return {"accepted": st.id, "status": st.status.value}

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str, after: int = 0, follow: bool = True, timeout: float = 30.0):
        holder = manager.get(session_id)
        if holder is None:
            return _error(404, "unknown-session", session_id)

        def stream():
            seq = after
            deadline = time.monotonic() + timeout
            while True:
                events = holder.session.events
                sent = False
                for ev in events:
                    if ev.seq > seq:
                        seq = ev.seq
                        sent = True
                        yield f"data: {ev.to_json()}\n\n"
                if not follow:
                    if not sent and not holder.busy:
                        return
                    if not holder.busy:
                        return
                if time.monotonic() > deadline:
                    return
                time.sleep(0.05)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app


def serve(bind: str, engine_factory):
    """Run the API in the foreground; raises on bind failure."""
    import uvicorn

    host, _, port = bind.rpartition(":")
    app = create_app(engine_factory)
    config = uvicorn.Config(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    server = uvicorn.Server(config)
    server.run()
