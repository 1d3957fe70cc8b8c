"""HTTP service exposing sessions, commands, and traces for the UI.

One catalog per process. Sessions live in memory behind per-session write
locks; every mutation also lands in the append-only event log, and a
restarted process replays the logs to rebuild its state. API views mirror
the engine state exactly; nothing is computed server-side.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .catalog import Catalog, CatalogError, Command, Quantity
from .embedding import EmbeddingTransportError
from .parser import LlmTransportError
from .session import (
    Session,
    SessionConfig,
    SessionEngine,
    SessionStateError,
    read_event_log,
)


class CreateSessionRequest(BaseModel):
    user_id: str
    history: list[str] = Field(default_factory=list)
    session_id: Optional[str] = None
    k: Optional[int] = None
    t_max: Optional[int] = None


class CommandRequest(BaseModel):
    text: str
    satisfied: bool = False


def _item_price(item) -> float | None:
    for value in item.attributes.get("price", ()):
        if isinstance(value, Quantity):
            return value.value
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    return None


def session_view(session: Session, catalog: Catalog) -> dict[str, Any]:
    """The API projection of a session; every field comes from the engine."""
    feed = session.current_feed
    items = []
    for item_id, breakdown in feed.entries:
        item = catalog.get(item_id)
        items.append(
            {
                "item_id": item_id,
                "title": item.title,
                "price": _item_price(item),
                "attributes": {
                    key: [
                        value.render() if isinstance(value, Quantity) else value
                        for value in values
                    ]
                    for key, values in sorted(item.attributes.items())
                },
                "scores": breakdown.to_dict(),
            }
        )
    trace = session.latest_trace
    return {
        "session_id": session.id,
        "user_id": session.user_id,
        "round": session.t,
        "status": session.status,
        "k": session.config.k,
        "t_max": session.config.t_max,
        "feed": items,
        "preferences": session.memory.to_dict(),
        "trace": trace.to_dict() if trace else None,
        "fallback": bool(trace.fallback) if trace else False,
    }


class SessionStore:
    """In-memory sessions plus per-session write serialization."""

    def __init__(self, engine: SessionEngine):
        self.engine = engine
        self.sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def add(self, session: Session) -> None:
        with self._registry_lock:
            self.sessions[session.id] = session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    def restore_from_logs(self) -> int:
        """Replay every log in the engine's log dir into live sessions."""
        if self.engine.log_dir is None:
            return 0
        restored = 0
        for path in sorted(Path(self.engine.log_dir).glob("*.log")):
            try:
                events = read_event_log(path)
            except Exception:
                continue
            created = next((e for e in events if e["kind"] == "created"), None)
            if created is None:
                continue
            payload = created["payload"]
            if payload["session_id"] in self.sessions:
                continue
            engine = self._replay_engine()
            session = engine.create_session(
                payload["user_id"],
                payload["history"],
                SessionConfig.from_dict(payload["config"]),
                session_id=payload["session_id"],
            )
            for event in events:
                if event["kind"] != "step":
                    continue
                step = event["payload"]
                engine.step(
                    session,
                    Command(text=step["command"], round=event["round"]),
                    satisfy_signal=step.get("satisfy_signal") or None,
                )
            self.add(session)
            restored += 1
        return restored

    def _replay_engine(self) -> SessionEngine:
        # Same components, but no log dir: replay must not re-log itself.
        return SessionEngine(
            catalog=self.engine.catalog,
            provider=self.engine.provider,
            parser_backend=self.engine.parser_backend,
            params=self.engine.params,
            aia=self.engine.aia,
            log_dir=None,
        )


def create_app(engine: SessionEngine, restore: bool = True) -> FastAPI:
    app = FastAPI(title="recfeed", version="0.1.0")
    # The companion UI is served as a static page from another origin.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(engine)
    if restore:
        store.restore_from_logs()
    app.state.store = store
    catalog = engine.catalog

    @app.get("/healthz")
    def healthz() -> dict[str, Any]:
        return {"status": "ok", "catalog_size": len(catalog)}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest) -> dict[str, Any]:
        if body.session_id and body.session_id in store.sessions:
            raise HTTPException(status_code=409, detail=f"session {body.session_id!r} exists")
        overrides = {}
        if body.k is not None:
            overrides["k"] = body.k
        if body.t_max is not None:
            overrides["t_max"] = body.t_max
        try:
            config = SessionConfig(**overrides)
            session = engine.create_session(
                body.user_id, body.history, config, session_id=body.session_id
            )
        except (CatalogError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        store.add(session)
        return session_view(session, catalog)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict[str, Any]:
        return session_view(store.get(session_id), catalog)

    @app.get("/sessions/{session_id}/trace")
    def get_trace(session_id: str) -> dict[str, Any]:
        session = store.get(session_id)
        trace = session.latest_trace
        return {
            "session_id": session.id,
            "round": session.t,
            "trace": trace.to_dict() if trace else None,
        }

    @app.post("/sessions/{session_id}/commands")
    def post_command(session_id: str, body: CommandRequest) -> dict[str, Any]:
        session = store.get(session_id)
        if not body.text.strip():
            raise HTTPException(status_code=400, detail="command text must be non-empty")
        with store.lock_for(session_id):
            try:
                engine.step(
                    session,
                    Command(text=body.text, round=session.t + 1),
                    satisfy_signal=body.satisfied or None,
                )
            except SessionStateError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            except (EmbeddingTransportError, LlmTransportError) as exc:
                raise HTTPException(status_code=502, detail=str(exc))
        return session_view(session, catalog)

    return app
