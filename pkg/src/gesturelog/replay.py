"""Replay recorded frame streams against a live server.

A trace is a self-contained JSON file: the session mapping/config plus an
ordered list of frame messages with inter-frame wall-clock gaps. Replay
creates a session, streams the frames at a speed multiplier (capture
timestamps untouched, so interval semantics are speed-invariant), measures
send-to-recognition round trips, and cross-checks the exported CSV
against the interval messages received.
"""

from __future__ import annotations

import asyncio
import json
import time
from dataclasses import dataclass

import httpx
import numpy as np
import websockets

from .classifier import GestureClass
from .datasets import load_prototypes
from .segmenter import LabelMapping, SegmenterConfig, parse_csv
from .server import latency_stats

TRACE_VERSION = 1


class ProtocolViolation(RuntimeError):
    pass


@dataclass
class ReplayTrace:
    frames: list  # [{gap_ms, seq, t_capture_ms, hands}] in send order
    fps: float
    mapping: LabelMapping
    config: SegmenterConfig | None = None

    def __post_init__(self):
        last_t = -1
        for i, fr in enumerate(self.frames):
            if fr["gap_ms"] < 0:
                raise ValueError(f"frame {i}: negative gap")
            if fr["t_capture_ms"] <= last_t:
                raise ValueError(f"frame {i}: timestamps must strictly increase")
            last_t = fr["t_capture_ms"]
        if self.fps <= 0:
            raise ValueError("fps must be positive")


def save_trace(trace: ReplayTrace, path) -> None:
    doc = {
        "version": TRACE_VERSION,
        "fps": trace.fps,
        "mapping": trace.mapping.to_wire(),
        "config": trace.config.to_wire() if trace.config else None,
        "frames": trace.frames,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_trace(path) -> ReplayTrace:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != TRACE_VERSION:
        raise ValueError(f"unsupported trace version {doc.get('version')!r}")
    return ReplayTrace(
        frames=doc["frames"],
        fps=doc["fps"],
        mapping=LabelMapping.from_wire(doc["mapping"]),
        config=SegmenterConfig.from_wire(doc["config"]) if doc.get("config") else None,
    )


def script_trace(
    script,
    mapping: LabelMapping,
    fps: float = 30.0,
    seed: int = 0,
    noise_sigma: float = 0.004,
    config: SegmenterConfig | None = None,
) -> ReplayTrace:
    """Build a trace from a gesture script: [(GestureClass | None, seconds)].

    None entries produce empty-hands frames; gesture entries render the
    prototype pose with slight seeded noise. Deterministic per seed.
    """
    prototypes = load_prototypes()
    rng = np.random.default_rng(seed)
    gap = 1000.0 / fps
    frames = []
    seq = 0
    for gesture, seconds in script:
        for _ in range(int(round(seconds * fps))):
            seq += 1
            if gesture is None or gesture is GestureClass.NO_GESTURE:
                hands = []
            else:
                pts = prototypes[gesture].landmarks + rng.normal(
                    scale=noise_sigma, size=(21, 3)
                )
                hands = [
                    {
                        "handedness": "Right",
                        "landmarks": [[float(v) for v in row] for row in pts],
                    }
                ]
            frames.append(
                {
                    "gap_ms": gap if seq > 1 else 0.0,
                    "seq": seq,
                    "t_capture_ms": int(round((seq - 1) * gap)),
                    "hands": hands,
                }
            )
    return ReplayTrace(frames=frames, fps=fps, mapping=mapping, config=config)


@dataclass
class ReplayReport:
    session_id: str
    frames_sent: int
    recognitions_received: int
    intervals: list
    e2e_latency: dict
    server_latency: dict
    speed: float

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "frames_sent": self.frames_sent,
            "recognitions_received": self.recognitions_received,
            "intervals": list(self.intervals),
            "e2e_latency_ms": self.e2e_latency,
            "server_latency_ms": self.server_latency,
            "speed": self.speed,
        }


def verify_csv_matches_intervals(csv_bytes: bytes, interval_messages: list) -> None:
    """The exported CSV rows must equal the interval messages, in order."""
    log = parse_csv(csv_bytes)
    if len(log.intervals) != len(interval_messages):
        raise ProtocolViolation(
            f"CSV has {len(log.intervals)} intervals, received {len(interval_messages)} messages"
        )
    for i, (row, msg) in enumerate(zip(log.intervals, interval_messages)):
        fields_match = (
            row.label == msg["label"]
            and row.gesture.value == msg["gesture"]
            and row.start_ms == msg["start_ms"]
            and row.end_ms == msg["end_ms"]
            and row.duration_ms == msg["duration_ms"]
            and row.frame_count == msg["frame_count"]
            and f"{row.mean_confidence:.4f}" == f"{msg['mean_confidence']:.4f}"
        )
        if not fields_match:
            raise ProtocolViolation(f"interval {i}: CSV row does not match message")


async def replay_async(
    trace: ReplayTrace,
    server_url: str,
    speed: float = 1.0,
    window: int = 64,
) -> ReplayReport:
    """Stream a trace and return the measured report.

    One sender and one receiver share the socket; the sender honors
    gap_ms/speed on an absolute schedule and keeps at most `window`
    frames in flight (sends are never reordered).
    """
    if speed <= 0:
        raise ValueError("speed must be positive")
    base = server_url.rstrip("/")
    ws_base = "ws" + base[len("http"):]

    async with httpx.AsyncClient(base_url=base, timeout=30.0) as http:
        body = {"mapping": trace.mapping.to_wire()}
        if trace.config is not None:
            body["config"] = trace.config.to_wire()
        resp = await http.post("/sessions", json=body)
        if resp.status_code != 201:
            raise ProtocolViolation(f"create failed: {resp.status_code} {resp.text}")
        session_id = resp.json()["session_id"]
        resp = await http.post(f"/sessions/{session_id}/start")
        if resp.status_code != 200:
            raise ProtocolViolation(f"start failed: {resp.status_code} {resp.text}")

        send_times: dict = {}
        rtts: list = []
        interval_messages: list = []
        expected_seqs: list = [fr["seq"] for fr in trace.frames]
        acked = 0
        ack_event = asyncio.Event()
        receiver_error: list = []

        async with websockets.connect(f"{ws_base}/ws/sessions/{session_id}") as ws:

            async def receive_loop():
                nonlocal acked
                expect_idx = 0
                try:
                    async for raw in ws:
                        now = time.perf_counter()
                        msg = json.loads(raw)
                        kind = msg.get("type")
                        if kind == "recognition":
                            if expect_idx >= len(expected_seqs) or msg["seq"] != expected_seqs[expect_idx]:
                                raise ProtocolViolation(
                                    f"seq echo mismatch: got {msg.get('seq')}, "
                                    f"expected {expected_seqs[expect_idx] if expect_idx < len(expected_seqs) else None}"
                                )
                            rtts.append((now - send_times[msg["seq"]]) * 1000.0)
                            expect_idx += 1
                            acked = expect_idx
                            ack_event.set()
                        elif kind == "interval":
                            interval_messages.append(msg)
                        elif kind == "error":
                            raise ProtocolViolation(
                                f"server error reply: {msg.get('error')}: {msg.get('detail')}"
                            )
                        else:
                            raise ProtocolViolation(f"malformed reply type {kind!r}")
                except websockets.ConnectionClosedOK:
                    pass
                except websockets.ConnectionClosedError:
                    pass
                except ProtocolViolation as exc:
                    receiver_error.append(exc)
                    ack_event.set()

            async def send_loop():
                start = time.perf_counter()
                elapsed_ms = 0.0
                for i, fr in enumerate(trace.frames):
                    elapsed_ms += fr["gap_ms"] / speed
                    target = start + elapsed_ms / 1000.0
                    delay = target - time.perf_counter()
                    if delay > 0:
                        await asyncio.sleep(delay)
                    while acked < i + 1 - window:
                        if receiver_error:
                            return
                        ack_event.clear()
                        await ack_event.wait()
                    payload = {
                        "type": "frame",
                        "session": session_id,
                        "seq": fr["seq"],
                        "t_capture_ms": fr["t_capture_ms"],
                        "hands": fr["hands"],
                    }
                    send_times[fr["seq"]] = time.perf_counter()
                    await ws.send(json.dumps(payload))

            receiver = asyncio.create_task(receive_loop())
            await send_loop()

            # wait for every frame to be acknowledged before stopping
            while acked < len(trace.frames) and not receiver_error:
                ack_event.clear()
                try:
                    await asyncio.wait_for(ack_event.wait(), timeout=30.0)
                except asyncio.TimeoutError:
                    raise ProtocolViolation(
                        f"timed out waiting for replies ({acked}/{len(trace.frames)})"
                    )

            resp = await http.post(f"/sessions/{session_id}/stop")
            if resp.status_code != 200:
                raise ProtocolViolation(f"stop failed: {resp.status_code} {resp.text}")
            await receiver  # drains trailing interval messages until close

        if receiver_error:
            raise receiver_error[0]

        csv_resp = await http.get(f"/sessions/{session_id}/export.csv")
        if csv_resp.status_code != 200:
            raise ProtocolViolation(f"export failed: {csv_resp.status_code}")
        verify_csv_matches_intervals(csv_resp.content, interval_messages)

        latency_resp = await http.get(f"/sessions/{session_id}/latency")
        server_latency = latency_resp.json() if latency_resp.status_code == 200 else {}

    return ReplayReport(
        session_id=session_id,
        frames_sent=len(trace.frames),
        recognitions_received=len(rtts),
        intervals=interval_messages,
        e2e_latency=latency_stats(rtts),
        server_latency=server_latency,
        speed=speed,
    )


def replay(trace: ReplayTrace, server_url: str, speed: float = 1.0) -> ReplayReport:
    return asyncio.run(replay_async(trace, server_url, speed))
