"""Realtime annotation service.

HTTP manages session lifecycle (create/start/stop/summary/export/latency);
a persistent websocket per session carries keypoint frames in and
recognition + interval events out. Only keypoint-derived metadata is ever
persisted — no frame payloads.
"""

from __future__ import annotations

import asyncio
import json
import math
import secrets
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse, Response

from .classifier import CLASS_ORDER, GestureClass, LandmarkClassifier
from .segmenter import (
    FramePrediction,
    IntervalClosed,
    IntervalOpened,
    InvalidMapping,
    LabelMapping,
    OutOfOrderFrame,
    SegmenterConfig,
    Segmenter,
    SessionLog,
    SessionNotStopped,
    SessionState,
    SessionStore,
    export_csv,
    format_utc_ms,
    summarize,
)
from .skeleton import NUM_LANDMARKS, DegenerateSkeleton, HandSkeleton, normalize


class UnknownSession(KeyError):
    pass


class InvalidState(RuntimeError):
    pass


class FrameError(ValueError):
    """In-band websocket error with a stable machine-readable code."""

    def __init__(self, code: str, detail: str):
        super().__init__(detail)
        self.code = code
        self.detail = detail


@dataclass
class Session:
    log: SessionLog
    segmenter: Segmenter
    config: SegmenterConfig
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    last_seq: int | None = None
    last_t_ms: int = 0
    latencies: list = field(default_factory=list)
    websocket: WebSocket | None = None


def nearest_rank(sorted_values, percentile: int) -> float:
    """Value at rank ceil(p/100 * n), 1-based, over a pre-sorted sample."""
    n = len(sorted_values)
    rank = math.ceil(percentile / 100 * n)
    return sorted_values[max(rank, 1) - 1]


def latency_stats(latencies) -> dict:
    if not latencies:
        return {"count": 0, "mean": None, "p50": None, "p95": None, "max": None}
    ordered = sorted(latencies)
    return {
        "count": len(ordered),
        "mean": sum(ordered) / len(ordered),
        "p50": nearest_rank(ordered, 50),
        "p95": nearest_rank(ordered, 95),
        "max": ordered[-1],
    }


def classify_hands(model: LandmarkClassifier, hands, threshold: float):
    """Reduce a frame's hands to one (gesture, confidence) prediction.

    Chooses the hand with the highest max-probability; degenerate
    skeletons are skipped; no usable hand means (NO_GESTURE, 0.0).
    """
    best_probs = None
    for hand in hands:
        skeleton = HandSkeleton.from_points(
            hand["landmarks"], handedness=hand.get("handedness", "Unknown")
        )
        try:
            features = normalize(skeleton)
        except DegenerateSkeleton:
            continue
        probs = model.predict(features)
        if best_probs is None or probs.max() > best_probs.max():
            best_probs = probs
    if best_probs is None:
        return GestureClass.NO_GESTURE, 0.0
    confidence = float(best_probs.max())
    if confidence >= threshold:
        return CLASS_ORDER[int(np.argmax(best_probs))], confidence
    return GestureClass.NO_GESTURE, confidence


def _validate_frame(payload: dict) -> tuple:
    seq = payload.get("seq")
    if not isinstance(seq, int) or isinstance(seq, bool):
        raise FrameError("malformed_frame", "seq must be an integer")
    t_ms = payload.get("t_capture_ms")
    if not isinstance(t_ms, (int, float)) or isinstance(t_ms, bool) or t_ms < 0:
        raise FrameError("malformed_frame", "t_capture_ms must be a non-negative number")
    hands = payload.get("hands")
    if not isinstance(hands, list):
        raise FrameError("malformed_frame", "hands must be a list")
    for hand in hands:
        if not isinstance(hand, dict):
            raise FrameError("malformed_frame", "each hand must be an object")
        landmarks = hand.get("landmarks")
        if not isinstance(landmarks, list) or len(landmarks) != NUM_LANDMARKS:
            raise FrameError(
                "malformed_frame", f"each hand needs exactly {NUM_LANDMARKS} landmarks"
            )
        for triple in landmarks:
            if (
                not isinstance(triple, list)
                or len(triple) != 3
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in triple)
                or not all(math.isfinite(v) for v in triple)
            ):
                raise FrameError("malformed_frame", "landmarks must be finite [x, y, z] triples")
    return seq, t_ms, hands


def create_app(
    model: LandmarkClassifier,
    store_dir,
    default_config: SegmenterConfig | None = None,
) -> FastAPI:
    app = FastAPI(title="gesturelog")
    app.state.model = model
    app.state.store = SessionStore(store_dir)
    app.state.default_config = default_config or SegmenterConfig()
    app.state.sessions = {}
    app.state.registry_lock = asyncio.Lock()

    def get_session(session_id: str) -> Session:
        session = app.state.sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    @app.exception_handler(InvalidMapping)
    async def _invalid_mapping(request: Request, exc: InvalidMapping):
        return JSONResponse(status_code=422, content={"error": "invalid_mapping", "detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _bad_value(request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"error": "invalid_request", "detail": str(exc)})

    @app.exception_handler(UnknownSession)
    async def _unknown_session(request: Request, exc: UnknownSession):
        return JSONResponse(status_code=404, content={"error": "unknown_session", "detail": str(exc)})

    @app.exception_handler(InvalidState)
    async def _invalid_state(request: Request, exc: InvalidState):
        return JSONResponse(status_code=409, content={"error": "invalid_state", "detail": str(exc)})

    @app.exception_handler(SessionNotStopped)
    async def _not_stopped(request: Request, exc: SessionNotStopped):
        return JSONResponse(
            status_code=409, content={"error": "session_not_stopped", "detail": str(exc)}
        )

    @app.get("/healthz")
    async def healthz():
        return PlainTextResponse("ok")

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        payload = await request.json()
        if not isinstance(payload, dict) or "mapping" not in payload:
            raise InvalidMapping("request body must include a mapping object")
        mapping = LabelMapping.from_wire(payload["mapping"])
        config = (
            SegmenterConfig.from_wire(payload["config"])
            if payload.get("config")
            else app.state.default_config
        )
        session_id = secrets.token_hex(16)
        log = SessionLog(
            session_id=session_id,
            started_at=datetime.now(timezone.utc),
            mapping=mapping,
            state=SessionState.CONFIGURED,
        )
        session = Session(log=log, segmenter=Segmenter(mapping, config), config=config)
        async with app.state.registry_lock:
            app.state.sessions[session_id] = session
        app.state.store.write_header(log)
        return JSONResponse(
            status_code=201,
            content={"session_id": session_id, "started_at": format_utc_ms(log.started_at)},
        )

    @app.post("/sessions/{session_id}/start")
    async def start_session(session_id: str):
        session = get_session(session_id)
        async with session.lock:
            if session.log.state is not SessionState.CONFIGURED:
                raise InvalidState(f"cannot start a {session.log.state.value} session")
            session.log.state = SessionState.RECORDING
        return {"session_id": session_id, "state": "recording"}

    @app.post("/sessions/{session_id}/stop")
    async def stop_session(session_id: str):
        session = get_session(session_id)
        async with session.lock:
            if session.log.state is not SessionState.RECORDING:
                raise InvalidState(f"cannot stop a {session.log.state.value} session")
            final = session.segmenter.finalize(session.last_t_ms)
            if final is not None:
                session.log.intervals.append(final)
                app.state.store.append_interval(session_id, final)
                if session.websocket is not None:
                    try:
                        await session.websocket.send_text(
                            json.dumps({"type": "interval", **final.to_dict()})
                        )
                    except Exception:
                        pass
            session.log.state = SessionState.STOPPED
            ws, session.websocket = session.websocket, None
        if ws is not None:
            # the session is over: close the socket so clients see a clean end
            try:
                await ws.close(code=1000)
            except Exception:
                pass
        return {
            "session_id": session_id,
            "state": "stopped",
            "intervals": [iv.to_dict() for iv in session.log.intervals],
        }

    @app.get("/sessions/{session_id}/summary")
    async def session_summary(session_id: str):
        session = get_session(session_id)
        return summarize(session.log).to_dict()

    @app.get("/sessions/{session_id}/export.csv")
    async def session_export(session_id: str):
        session = get_session(session_id)
        data = export_csv(session.log)
        return Response(
            content=data,
            media_type="text/csv; charset=utf-8",
            headers={"Content-Disposition": f'attachment; filename="{session_id}.csv"'},
        )

    @app.get("/sessions/{session_id}/latency")
    async def session_latency(session_id: str):
        session = get_session(session_id)
        return latency_stats(list(session.latencies))

    async def process_frame(session: Session, payload: dict) -> list:
        """Returns the outbound message payloads for one frame, in order."""
        received_at = time.perf_counter()
        seq, t_ms, hands = _validate_frame(payload)
        async with session.lock:
            if session.log.state is not SessionState.RECORDING:
                raise FrameError("not_recording", f"session is {session.log.state.value}")
            if session.last_seq is not None and seq <= session.last_seq:
                raise FrameError("out_of_order", f"seq {seq} <= last seq {session.last_seq}")
            gesture, confidence = classify_hands(
                app.state.model, hands, session.config.confidence_threshold
            )
            try:
                prediction = FramePrediction(t_ms=t_ms, gesture=gesture, confidence=confidence)
                events = session.segmenter.ingest(prediction)
            except OutOfOrderFrame as exc:
                raise FrameError("out_of_order", str(exc)) from None
            session.last_seq = seq
            session.last_t_ms = prediction.t_ms
            closed = [ev.interval for ev in events if isinstance(ev, IntervalClosed)]
            opened = [ev for ev in events if isinstance(ev, IntervalOpened)]
            for interval in closed:
                session.log.intervals.append(interval)
                app.state.store.append_interval(session.log.session_id, interval)
            if opened:
                interval_state = "just_opened"
            elif closed:
                interval_state = "just_closed"
            elif session.segmenter.is_open:
                interval_state = "open"
            else:
                interval_state = "idle"
            recognition = {
                "type": "recognition",
                "seq": seq,
                "gesture": gesture.value,
                "label": session.log.mapping.label_for(gesture),
                "confidence": confidence,
                "interval_state": interval_state,
                "server_latency_ms": (time.perf_counter() - received_at) * 1000.0,
            }
            session.latencies.append(recognition["server_latency_ms"])
            return [recognition] + [{"type": "interval", **iv.to_dict()} for iv in closed]

    @app.websocket("/ws/sessions/{session_id}")
    async def session_socket(websocket: WebSocket, session_id: str):
        await websocket.accept()
        session = app.state.sessions.get(session_id)
        if session is not None:
            session.websocket = websocket
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    payload = json.loads(raw)
                except json.JSONDecodeError:
                    await websocket.send_text(
                        json.dumps({"type": "error", "error": "bad_json", "detail": "not valid JSON", "seq": None})
                    )
                    continue
                if not isinstance(payload, dict) or payload.get("type") != "frame":
                    kind = payload.get("type") if isinstance(payload, dict) else None
                    await websocket.send_text(
                        json.dumps(
                            {
                                "type": "error",
                                "error": "unknown_type",
                                "detail": f"unsupported message type {kind!r}",
                                "seq": None,
                            }
                        )
                    )
                    continue
                seq = payload.get("seq") if isinstance(payload.get("seq"), int) else None
                session = app.state.sessions.get(session_id)
                if session is None:
                    await websocket.send_text(
                        json.dumps(
                            {
                                "type": "error",
                                "error": "unknown_session",
                                "detail": f"no session {session_id}",
                                "seq": seq,
                            }
                        )
                    )
                    continue
                if payload.get("session") != session_id:
                    await websocket.send_text(
                        json.dumps(
                            {
                                "type": "error",
                                "error": "session_mismatch",
                                "detail": "frame session does not match socket path",
                                "seq": seq,
                            }
                        )
                    )
                    continue
                if session.websocket is not websocket:
                    session.websocket = websocket
                try:
                    replies = await process_frame(session, payload)
                except FrameError as exc:
                    replies = [
                        {"type": "error", "error": exc.code, "detail": exc.detail, "seq": seq}
                    ]
                for reply in replies:
                    await websocket.send_text(json.dumps(reply))
        except WebSocketDisconnect:
            session = app.state.sessions.get(session_id)
            if session is not None and session.websocket is websocket:
                session.websocket = None

    return app
