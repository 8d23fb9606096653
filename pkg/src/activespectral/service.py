"""HTTP session service: a human oracle answers pairwise queries over JSON.

Each live session advances synchronously inside the answering request (desk
scale clustering finishes in interactive time); sessions above the dense
threshold advance on a background thread and report 202 until ready.
"""

from __future__ import annotations

import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .engine import (
    AWAITING_ANSWER,
    FINISHED,
    SessionConfig,
    SessionState,
    advance,
    init_session,
    save_session,
)
from .errors import ActiveSpectralError, InvalidParameter
from .metrics import jaccard, v_measure
from .oracle import Answer

SYNC_LIMIT = 1000          # above this, answers advance on a worker thread
IDLE_EVICT_SECONDS = 24 * 3600


@dataclass
class SessionHolder:
    state: SessionState
    lock: threading.Lock = field(default_factory=threading.Lock)
    created_at: float = field(default_factory=time.time)
    last_activity: float = field(default_factory=time.time)
    busy: bool = False      # background advance in flight

    def touch(self) -> None:
        self.last_activity = time.time()


def _sample_meta(st: SessionState, index: int) -> dict:
    meta: dict = {"id": index}
    if st.media and index in st.media:
        meta["image"] = st.media[index]
    if st.features is not None:
        meta["features"] = [round(float(v), 6) for v in st.features[index][:16]]
    return meta


def _query_payload(st: SessionState) -> dict:
    if st.status == FINISHED:
        return {"status": "finished", "queries_used": st.queries_used,
                "budget": st.config.query_budget}
    pair = st.pending_pair()
    return {
        "status": st.status,
        "pair": list(pair),
        "sample_meta": [_sample_meta(st, pair[0]), _sample_meta(st, pair[1])],
        "queries_used": st.queries_used,
        "budget": st.config.query_budget,
    }


def _clustering_payload(st: SessionState) -> dict:
    payload = {
        "labels": [int(v) for v in st.assignment.labels],
        "n_c": st.n_c,
        "certain_sets": [sorted(s) for s in st.certain.sets],
        "queries_used": st.queries_used,
        "status": st.status,
    }
    if st.labels is not None:
        v, h, c = v_measure(st.assignment.labels, st.labels)
        payload["metrics"] = {
            "jcc": jaccard(st.assignment.labels, st.labels),
            "v_measure": v,
            "homogeneity": h,
            "completeness": c,
        }
    return payload


def create_app(data_dir: str | None = None, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="activespectral session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, SessionHolder] = {}
    registry_lock = threading.Lock()
    save_dir = Path(data_dir) if data_dir else Path(tempfile.gettempdir())

    def _evict_idle() -> None:
        now = time.time()
        with registry_lock:
            stale = [sid for sid, h in sessions.items()
                     if now - h.last_activity > IDLE_EVICT_SECONDS]
            for sid in stale:
                holder = sessions.pop(sid)
                try:
                    save_session(holder.state, save_dir / f"session-{sid}.json")
                except OSError:
                    pass

    def _get(sid: str) -> SessionHolder | None:
        with registry_lock:
            return sessions.get(sid)

    @app.post("/sessions", status_code=201)
    def create_session(body: dict):
        _evict_idle()
        body = dict(body)
        body.setdefault("oracle", "interactive")
        if body["oracle"] != "interactive":
            return JSONResponse({"error": "service sessions require oracle=interactive"},
                                status_code=400)
        if data_dir and "data" in body and not Path(body["data"]).is_absolute():
            body["data"] = str(Path(data_dir) / body["data"])
        try:
            cfg = SessionConfig.from_dict(body)
        except (InvalidParameter, TypeError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        try:
            st = init_session(cfg)
        except ActiveSpectralError as exc:
            return JSONResponse({"error": f"dataset unloadable: {exc}"}, status_code=422)
        except OSError as exc:
            return JSONResponse({"error": f"dataset unloadable: {exc}"}, status_code=422)
        advance(st)  # runs until the first human question is pending
        sid = uuid.uuid4().hex
        with registry_lock:
            sessions[sid] = SessionHolder(state=st)
        return {"id": sid, "status": st.status}

    @app.get("/sessions/{sid}/query")
    def next_query(sid: str):
        holder = _get(sid)
        if holder is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        with holder.lock:
            holder.touch()
            if holder.busy:
                return JSONResponse({"status": "processing"}, status_code=202)
            return _query_payload(holder.state)

    @app.get("/sessions/{sid}/status")
    def session_status(sid: str):
        holder = _get(sid)
        if holder is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        with holder.lock:
            return {"status": "processing" if holder.busy else holder.state.status,
                    "queries_used": holder.state.queries_used,
                    "n_c": holder.state.n_c}

    @app.post("/sessions/{sid}/answer")
    def submit_answer(sid: str, body: dict):
        holder = _get(sid)
        if holder is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        try:
            pair = tuple(int(v) for v in body["pair"])
            answer = Answer.MUST_LINK if body["answer"] == "must" else (
                Answer.CANNOT_LINK if body["answer"] == "cannot" else None)
        except (KeyError, TypeError, ValueError):
            return JSONResponse({"error": "body must carry pair=[i,j] and answer"},
                                status_code=400)
        if answer is None:
            return JSONResponse({"error": f"unknown answer {body['answer']!r}"},
                                status_code=400)
        with holder.lock:
            holder.touch()
            st = holder.state
            if holder.busy or st.status != AWAITING_ANSWER or pair != st.pending_pair():
                return JSONResponse(
                    {"error": "pair does not match the pending query",
                     "pending": list(st.pending_pair()) if st.pending_pair() else None},
                    status_code=409)
            st.oracle.provide(pair[0], pair[1], answer)
            st.status = "running"
            if st.n > SYNC_LIMIT:
                holder.busy = True

                def _work():
                    try:
                        advance(st)
                    finally:
                        with holder.lock:
                            holder.busy = False

                threading.Thread(target=_work, daemon=True).start()
                return JSONResponse({"accepted": True, "status": "processing"},
                                    status_code=202)
            advance(st)
            nxt = st.pending_pair()
            return {"accepted": True,
                    "next": list(nxt) if nxt else None,
                    "status": st.status,
                    "queries_used": st.queries_used}

    @app.get("/sessions/{sid}/clustering")
    def get_clustering(sid: str):
        holder = _get(sid)
        if holder is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        with holder.lock:
            holder.touch()
            if holder.state.assignment is None:
                return JSONResponse({"error": "no clustering computed yet"}, status_code=409)
            return _clustering_payload(holder.state)

    @app.get("/sessions/{sid}/export")
    def export_session(sid: str):
        holder = _get(sid)
        if holder is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        with holder.lock:
            holder.touch()
            path = save_dir / f"export-{sid}.json"
            save_session(holder.state, path)
            payload = path.read_text()
        return Response(content=payload, media_type="application/json",
                        headers={"Content-Disposition":
                                 f'attachment; filename="session-{sid}.json"'})

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
