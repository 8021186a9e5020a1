"""HTTP service hosting annotation sessions for the browser front-end.

Wire protocol (version 1, JSON bodies):

    GET  /api/version                      -> {protocol_version, emotion}
    POST /api/sessions                     -> {session_id}
    GET  /api/sessions/{sid}               -> progress
    GET  /api/sessions/{sid}/next?annotator_id=A
                                           -> {done} | question payload
    POST /api/sessions/{sid}/responses     -> outcome
         body: {annotator_id, tuple_index, best_id, worst_id}
    GET  /api/sessions/{sid}/export        -> response TSV (text/plain)

Sessions persist as append-only JSONL event logs, one file per session,
replayed on startup; every accepted response is flushed before the reply is
sent, so a crash loses nothing that was acknowledged.  Mutations to one
session are serialized behind a per-session lock.  The storage directory
comes from the config or the BWS_STORAGE_DIR environment variable.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .annotation import GoldQuestion, Response, Session
from .design import TupleDesign, serialize_design
from .errors import (
    RejectedAnnotatorError,
    ToolkitError,
    ValidationError,
)

PROTOCOL_VERSION = 1

EMOTION_ADJECTIVES = {
    "anger": "angry",
    "fear": "fearful",
    "joy": "happy",
    "sadness": "sad",
}

QUESTION_NOTES = [
    "This task is about the emotion of the speaker, not about the emotion "
    "of someone else mentioned or spoken to.",
    "If two or more speakers seem equal, select any one of them.",
    "Try not to over-think the answer. Let your instinct guide you.",
]


class SubmitBody(BaseModel):
    annotator_id: str
    tuple_index: int
    best_id: str
    worst_id: str


@dataclass
class ServiceConfig:
    design: TupleDesign
    gold: tuple[GoldQuestion, ...]
    texts: dict[str, str]
    emotion: str = "fear"
    per_tuple: int = 3
    seed: int = 0
    storage_dir: Optional[str] = None

    def resolved_storage_dir(self) -> str:
        path = self.storage_dir or os.environ.get("BWS_STORAGE_DIR") or "sessions"
        os.makedirs(path, exist_ok=True)
        return path


def _fingerprint(config: ServiceConfig) -> str:
    h = hashlib.sha256()
    h.update(serialize_design(config.design).encode())
    for g in sorted(config.gold, key=lambda g: g.tuple_index):
        h.update(
            f"{g.tuple_index}|{sorted(g.acceptable_best)}|{sorted(g.acceptable_worst)}".encode()
        )
    h.update(str(config.per_tuple).encode())
    return h.hexdigest()[:16]


class SessionStore:
    """Sessions plus their event logs; replays existing logs on startup."""

    def __init__(self, config: ServiceConfig):
        missing = [i for i in config.design.item_ids if i not in config.texts]
        if missing:
            raise ValidationError(
                f"{len(missing)} design items lack text, e.g. {missing[0]!r}"
            )
        self.config = config
        self.storage_dir = config.resolved_storage_dir()
        self.fingerprint = _fingerprint(config)
        self.sessions: dict[str, Session] = {}
        self.locks: dict[str, threading.Lock] = {}
        self._store_lock = threading.Lock()
        self._replay_all()

    # -- persistence -------------------------------------------------------

    def _log_path(self, session_id: str) -> str:
        return os.path.join(self.storage_dir, f"{session_id}.jsonl")

    def _replay_all(self) -> None:
        for fname in sorted(os.listdir(self.storage_dir)):
            if not fname.endswith(".jsonl"):
                continue
            session_id = fname[: -len(".jsonl")]
            self._replay_one(session_id)

    def _replay_one(self, session_id: str) -> None:
        session = None
        with open(self._log_path(session_id), encoding="utf-8") as fh:
            for raw in fh:
                raw = raw.strip()
                if not raw:
                    continue
                event = json.loads(raw)
                if event["type"] == "created":
                    if event["fingerprint"] != self.fingerprint:
                        raise ValidationError(
                            f"session {session_id} was created against a "
                            "different design/gold configuration"
                        )
                    session = Session(
                        design=self.config.design,
                        gold=self.config.gold,
                        per_tuple=event["per_tuple"],
                        seed=event["seed"],
                    )
                elif event["type"] == "response":
                    if session is None:
                        raise ValidationError(
                            f"session {session_id}: response before creation"
                        )
                    outcome = session.submit_response(
                        Response(
                            annotator_id=event["annotator_id"],
                            tuple_index=event["tuple_index"],
                            best=event["best_id"],
                            worst=event["worst_id"],
                        )
                    )
                    if outcome.kind != event["outcome"]:
                        raise ValidationError(
                            f"session {session_id}: replay diverged "
                            f"({outcome.kind} vs logged {event['outcome']})"
                        )
        if session is not None:
            self.sessions[session_id] = session
            self.locks[session_id] = threading.Lock()

    def _append(self, session_id: str, event: dict) -> None:
        with open(self._log_path(session_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    # -- operations ----------------------------------------------------------

    def create_session(self) -> str:
        with self._store_lock:
            session_id = f"s{len(self.sessions) + 1:06d}"
            while session_id in self.sessions:
                session_id = f"s{int(session_id[1:]) + 1:06d}"
            session = Session(
                design=self.config.design,
                gold=self.config.gold,
                per_tuple=self.config.per_tuple,
                seed=self.config.seed,
            )
            self.sessions[session_id] = session
            self.locks[session_id] = threading.Lock()
            self._append(
                session_id,
                {
                    "type": "created",
                    "fingerprint": self.fingerprint,
                    "per_tuple": self.config.per_tuple,
                    "seed": self.config.seed,
                },
            )
            return session_id

    def submit(self, session_id: str, body: SubmitBody):
        session = self.sessions[session_id]
        with self.locks[session_id]:
            outcome = session.submit_response(
                Response(
                    annotator_id=body.annotator_id,
                    tuple_index=body.tuple_index,
                    best=body.best_id,
                    worst=body.worst_id,
                )
            )
            self._append(
                session_id,
                {
                    "type": "response",
                    "annotator_id": body.annotator_id,
                    "tuple_index": body.tuple_index,
                    "best_id": body.best_id,
                    "worst_id": body.worst_id,
                    "outcome": outcome.kind,
                    "gold_correct": outcome.gold_correct,
                },
            )
            return outcome


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="bws-intensity annotation service")
    config = store.config
    adjective = EMOTION_ADJECTIVES.get(config.emotion, config.emotion)

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    def not_found(session_id: str) -> JSONResponse:
        return JSONResponse(
            status_code=404, content={"error": f"unknown session {session_id!r}"}
        )

    @app.get("/api/version")
    def version():
        return {"protocol_version": PROTOCOL_VERSION, "emotion": config.emotion}

    @app.post("/api/sessions")
    def create_session():
        session_id = store.create_session()
        return {"session_id": session_id, "protocol_version": PROTOCOL_VERSION}

    @app.get("/api/sessions/{session_id}")
    def progress(session_id: str):
        session = store.sessions.get(session_id)
        if session is None:
            return not_found(session_id)
        body = session.progress()
        body["session_id"] = session_id
        body["protocol_version"] = PROTOCOL_VERSION
        return body

    @app.get("/api/sessions/{session_id}/next")
    def next_question(session_id: str, annotator_id: str):
        session = store.sessions.get(session_id)
        if session is None:
            return not_found(session_id)
        with store.locks[session_id]:
            try:
                question = session.next_question(annotator_id)
            except RejectedAnnotatorError as exc:
                return JSONResponse(
                    status_code=403,
                    content={"error": "rejected", "explanation": str(exc)},
                )
        if question is None:
            return {"done": True, "progress": session.progress()}
        speakers = [
            {"label": f"Speaker {k + 1}", "item_id": item, "text": config.texts[item]}
            for k, item in enumerate(question.items)
        ]
        return {
            "done": False,
            "tuple_index": question.tuple_index,
            "position": question.position,
            "speakers": speakers,
            "prompt_most": (
                f"Which of the four speakers is likely to be the MOST {adjective}?"
            ),
            "prompt_least": (
                f"Which of the four speakers is likely to be the LEAST {adjective}?"
            ),
            "notes": QUESTION_NOTES,
            "progress": session.progress(),
            "protocol_version": PROTOCOL_VERSION,
        }

    @app.post("/api/sessions/{session_id}/responses")
    def submit(session_id: str, body: SubmitBody):
        if session_id not in store.sessions:
            return not_found(session_id)
        try:
            outcome = store.submit(session_id, body)
        except RejectedAnnotatorError as exc:
            return JSONResponse(
                status_code=403,
                content={"error": "rejected", "explanation": str(exc)},
            )
        except ValidationError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        session = store.sessions[session_id]
        reply = {"outcome": outcome.kind, "progress": session.progress()}
        if outcome.kind == "gold":
            reply["correct"] = outcome.gold_correct
        if outcome.kind == "rejected":
            reply["correct"] = outcome.gold_correct
            reply["explanation"] = (
                "gold-question accuracy fell below the 70% gate; the session "
                "is closed for this annotator and their prior responses were "
                "discarded"
            )
        return reply

    @app.get("/api/sessions/{session_id}/export")
    def export(session_id: str):
        session = store.sessions.get(session_id)
        if session is None:
            return not_found(session_id)
        with store.locks[session_id]:
            response_set = session.response_set()
        lines = [
            f"{r.annotator_id}\t{r.tuple_index}\t{r.best}\t{r.worst}\t{r.ordinal}"
            for r in response_set.responses
        ]
        return PlainTextResponse("\n".join(lines) + ("\n" if lines else ""))

    @app.exception_handler(ToolkitError)
    async def toolkit_error(request: Request, exc: ToolkitError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    return app
