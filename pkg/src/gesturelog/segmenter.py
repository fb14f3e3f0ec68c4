"""Debounced segmentation of per-frame gesture predictions into intervals.

A stream of (timestamp, gesture, confidence) predictions is folded into
labeled annotation intervals with hysteresis: an interval opens after
``open_count`` consecutive frames matching the same mapped gesture at or
above the confidence threshold, and closes after ``close_count``
consecutive non-matching frames (ending at the last matching frame).
Also holds session logs plus their CSV / summary / JSON-Lines forms.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .classifier import CLASS_ORDER, GestureClass


class InvalidMapping(ValueError):
    pass


class OutOfOrderFrame(ValueError):
    pass


class SessionNotStopped(RuntimeError):
    pass


class MalformedRecord(ValueError):
    pass


MAX_MAPPING_ENTRIES = 5


@dataclass(frozen=True)
class LabelMapping:
    """Gesture -> label assignment; unmapped gestures are ignored downstream."""

    entries: dict

    def __post_init__(self):
        entries = dict(self.entries)
        if not entries:
            raise InvalidMapping("mapping must have at least one entry")
        if len(entries) > MAX_MAPPING_ENTRIES:
            raise InvalidMapping(f"mapping has {len(entries)} entries, max {MAX_MAPPING_ENTRIES}")
        for gesture, label in entries.items():
            if not isinstance(gesture, GestureClass) or gesture is GestureClass.NO_GESTURE:
                raise InvalidMapping(f"invalid mapping key {gesture!r}")
            if not isinstance(label, str) or not label:
                raise InvalidMapping(f"empty label for {gesture.value}")
            if any(unicodedata.category(ch) == "Cc" for ch in label):
                raise InvalidMapping(f"label for {gesture.value} contains control characters")
        labels = list(entries.values())
        if len(set(labels)) != len(labels):
            raise InvalidMapping("labels must be pairwise distinct")
        object.__setattr__(self, "entries", entries)

    def __contains__(self, gesture: GestureClass) -> bool:
        return gesture in self.entries

    def label_for(self, gesture: GestureClass):
        return self.entries.get(gesture)

    def to_wire(self) -> dict:
        return {g.value: self.entries[g] for g in CLASS_ORDER if g in self.entries}

    @classmethod
    def from_wire(cls, wire: dict) -> "LabelMapping":
        if not isinstance(wire, dict):
            raise InvalidMapping("mapping must be an object of gesture -> label")
        entries = {}
        for name, label in wire.items():
            try:
                gesture = GestureClass(name)
            except ValueError:
                raise InvalidMapping(f"unknown gesture {name!r}") from None
            entries[gesture] = label
        return cls(entries)


@dataclass(frozen=True)
class FramePrediction:
    t_ms: int
    gesture: GestureClass
    confidence: float

    def __post_init__(self):
        t = self.t_ms
        if isinstance(t, float):
            if not t.is_integer():
                t = round(t)
            object.__setattr__(self, "t_ms", int(t))
        if self.t_ms < 0:
            raise ValueError("t_ms must be >= 0")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")


@dataclass(frozen=True)
class SegmenterConfig:
    confidence_threshold: float = 0.7
    open_count: int = 5
    close_count: int = 10

    def __post_init__(self):
        if not 0.0 < self.confidence_threshold < 1.0:
            raise ValueError("confidence_threshold must be in (0, 1)")
        if self.open_count < 1 or self.close_count < 1:
            raise ValueError("open_count and close_count must be >= 1")

    def to_wire(self) -> dict:
        return {
            "confidence_threshold": self.confidence_threshold,
            "open_count": self.open_count,
            "close_count": self.close_count,
        }

    @classmethod
    def from_wire(cls, wire: dict) -> "SegmenterConfig":
        known = {"confidence_threshold", "open_count", "close_count"}
        unknown = set(wire) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**wire)


@dataclass(frozen=True)
class AnnotationInterval:
    label: str
    gesture: GestureClass
    start_ms: int
    end_ms: int
    mean_confidence: float
    frame_count: int

    def __post_init__(self):
        if self.end_ms < self.start_ms:
            raise ValueError("end_ms must be >= start_ms")
        if not 0.0 <= self.mean_confidence <= 1.0:
            raise ValueError("mean_confidence must be in [0, 1]")
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "gesture": self.gesture.value,
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "duration_ms": self.duration_ms,
            "mean_confidence": self.mean_confidence,
            "frame_count": self.frame_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotationInterval":
        return cls(
            label=d["label"],
            gesture=GestureClass(d["gesture"]),
            start_ms=d["start_ms"],
            end_ms=d["end_ms"],
            mean_confidence=d["mean_confidence"],
            frame_count=d["frame_count"],
        )


@dataclass(frozen=True)
class IntervalOpened:
    gesture: GestureClass
    label: str
    start_ms: int


@dataclass(frozen=True)
class IntervalClosed:
    interval: AnnotationInterval


class Segmenter:
    """Streaming debounce state machine; one instance per session."""

    def __init__(self, mapping: LabelMapping, config: SegmenterConfig | None = None):
        self.mapping = mapping
        self.config = config or SegmenterConfig()
        self._last_t = None
        # open-interval state
        self._open_gesture = None
        self._open_start = 0
        self._open_last_match = 0
        self._open_conf_sum = 0.0
        self._open_frames = 0
        self._nonmatch_streak = 0
        # current consecutive-match run; tracked independently of the
        # open/idle state so a run survives a timeout-close
        self._run_gesture = None
        self._run_len = 0
        self._run_start = 0
        self._run_conf_sum = 0.0

    @property
    def is_open(self) -> bool:
        return self._open_gesture is not None

    @property
    def open_gesture(self):
        return self._open_gesture

    def _close(self) -> IntervalClosed:
        interval = AnnotationInterval(
            label=self.mapping.label_for(self._open_gesture),
            gesture=self._open_gesture,
            start_ms=self._open_start,
            end_ms=self._open_last_match,
            mean_confidence=self._open_conf_sum / self._open_frames,
            frame_count=self._open_frames,
        )
        self._open_gesture = None
        self._nonmatch_streak = 0
        return IntervalClosed(interval)

    def _open_from_run(self, t_ms: int) -> IntervalOpened:
        self._open_gesture = self._run_gesture
        self._open_start = self._run_start
        self._open_last_match = t_ms
        self._open_conf_sum = self._run_conf_sum
        self._open_frames = self._run_len
        self._nonmatch_streak = 0
        return IntervalOpened(
            gesture=self._open_gesture,
            label=self.mapping.label_for(self._open_gesture),
            start_ms=self._open_start,
        )

    def ingest(self, frame: FramePrediction) -> list:
        if self._last_t is not None and frame.t_ms < self._last_t:
            raise OutOfOrderFrame(f"t_ms {frame.t_ms} < previous {self._last_t}")
        self._last_t = frame.t_ms

        matched = (
            frame.gesture
            if frame.gesture in self.mapping
            and frame.confidence >= self.config.confidence_threshold
            else None
        )

        if matched is None:
            self._run_gesture = None
            self._run_len = 0
            self._run_conf_sum = 0.0
        elif matched is self._run_gesture:
            self._run_len += 1
            self._run_conf_sum += frame.confidence
        else:
            self._run_gesture = matched
            self._run_len = 1
            self._run_start = frame.t_ms
            self._run_conf_sum = frame.confidence

        events = []
        if self._open_gesture is not None:
            if matched is self._open_gesture:
                self._open_last_match = frame.t_ms
                self._open_conf_sum += frame.confidence
                self._open_frames += 1
                self._nonmatch_streak = 0
            else:
                self._nonmatch_streak += 1
                if matched is not None and self._run_len >= self.config.open_count:
                    # sustained different gesture: close and reopen in one step
                    events.append(self._close())
                    events.append(self._open_from_run(frame.t_ms))
                elif self._nonmatch_streak >= self.config.close_count:
                    events.append(self._close())
        else:
            if matched is not None and self._run_len >= self.config.open_count:
                events.append(self._open_from_run(frame.t_ms))
        return events

    def finalize(self, t_ms: int):
        """Close any open interval at end of stream; idempotent."""
        if self._last_t is not None and t_ms < self._last_t:
            raise OutOfOrderFrame(f"finalize t_ms {t_ms} < last frame {self._last_t}")
        self._run_gesture = None
        self._run_len = 0
        self._run_conf_sum = 0.0
        if self._open_gesture is None:
            return None
        return self._close().interval


def configure(mapping: LabelMapping, config: SegmenterConfig | None = None) -> Segmenter:
    return Segmenter(mapping, config)


class SessionState(enum.Enum):
    CONFIGURED = "configured"
    RECORDING = "recording"
    STOPPED = "stopped"


@dataclass
class SessionLog:
    session_id: str
    started_at: datetime  # UTC
    mapping: LabelMapping
    intervals: list = field(default_factory=list)
    state: SessionState = SessionState.CONFIGURED


def format_utc_ms(dt: datetime) -> str:
    """ISO-8601 with millisecond precision and a Z suffix."""
    dt = dt.astimezone(timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


def parse_utc_ms(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%S.%fZ").replace(tzinfo=timezone.utc)


CSV_HEADER = (
    "session_id,label,gesture,start_iso8601,start_ms,end_ms,"
    "duration_ms,mean_confidence,frame_count"
)


def export_csv(log: SessionLog) -> bytes:
    """Deterministic RFC-4180 CSV with LF line endings."""
    if log.state is not SessionState.STOPPED:
        raise SessionNotStopped(f"session is {log.state.value}, not stopped")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for iv in sorted(log.intervals, key=lambda iv: iv.start_ms):
        start_iso = format_utc_ms(log.started_at + timedelta(milliseconds=iv.start_ms))
        writer.writerow(
            [
                log.session_id,
                iv.label,
                iv.gesture.value,
                start_iso,
                iv.start_ms,
                iv.end_ms,
                iv.duration_ms,
                f"{iv.mean_confidence:.4f}",
                iv.frame_count,
            ]
        )
    return buf.getvalue().encode("utf-8")


def parse_csv(data: bytes) -> SessionLog:
    """Inverse of export_csv, sufficient for a byte-identical re-export.

    The mapping is reconstructed from the (gesture, label) pairs that
    appear in rows; an empty export parses to an empty placeholder log.
    """
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    rows = list(reader)
    if not rows or rows[0] != CSV_HEADER.split(","):
        raise MalformedRecord("missing or wrong CSV header")
    session_id = ""
    started_at = datetime(1970, 1, 1, tzinfo=timezone.utc)
    entries = {}
    intervals = []
    for row in rows[1:]:
        if len(row) != 9:
            raise MalformedRecord(f"expected 9 fields, got {len(row)}")
        sid, label, gesture_name, start_iso, start_ms, end_ms, _dur, conf, frames = row
        session_id = sid
        gesture = GestureClass(gesture_name)
        start_ms = int(start_ms)
        started_at = parse_utc_ms(start_iso) - timedelta(milliseconds=start_ms)
        entries[gesture] = label
        intervals.append(
            AnnotationInterval(
                label=label,
                gesture=gesture,
                start_ms=start_ms,
                end_ms=int(end_ms),
                mean_confidence=float(conf),
                frame_count=int(frames),
            )
        )
    mapping = LabelMapping(entries) if entries else LabelMapping({GestureClass.FIST: "unused"})
    return SessionLog(
        session_id=session_id,
        started_at=started_at,
        mapping=mapping,
        intervals=intervals,
        state=SessionState.STOPPED,
    )


@dataclass(frozen=True)
class Summary:
    per_label_duration_ms: dict
    per_label_count: dict
    shares: dict
    total_annotated_ms: int
    timeline: tuple

    def to_dict(self) -> dict:
        return {
            "total_annotated_ms": self.total_annotated_ms,
            "labels": {
                label: {
                    "duration_ms": self.per_label_duration_ms[label],
                    "count": self.per_label_count[label],
                    "share": self.shares[label],
                }
                for label in sorted(self.per_label_duration_ms)
            },
            "timeline": [iv.to_dict() for iv in self.timeline],
        }


def summarize(log: SessionLog) -> Summary:
    """Per-label totals, counts, and shares of annotated time."""
    timeline = tuple(sorted(log.intervals, key=lambda iv: iv.start_ms))
    durations: dict = {}
    counts: dict = {}
    for iv in timeline:
        durations[iv.label] = durations.get(iv.label, 0) + iv.duration_ms
        counts[iv.label] = counts.get(iv.label, 0) + 1
    total = sum(durations.values())
    shares = {label: (d / total if total else 0.0) for label, d in durations.items()}
    return Summary(
        per_label_duration_ms=dict(sorted(durations.items())),
        per_label_count=dict(sorted(counts.items())),
        shares=dict(sorted(shares.items())),
        total_annotated_ms=total,
        timeline=timeline,
    )


class SessionStore:
    """Append-only JSON-Lines persistence, one file per session.

    The header record is written at creation and every interval is
    appended when emitted, so a crash loses at most the open interval.
    """

    def __init__(self, directory):
        import os

        self.directory = str(directory)
        os.makedirs(self.directory, exist_ok=True)

    def path_for(self, session_id: str) -> str:
        import os

        if not session_id or any(c not in "0123456789abcdef" for c in session_id):
            raise ValueError(f"unsafe session id {session_id!r}")
        return os.path.join(self.directory, f"{session_id}.jsonl")

    def _append(self, session_id: str, record: dict) -> None:
        with open(self.path_for(session_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    def write_header(self, log: SessionLog) -> None:
        self._append(
            log.session_id,
            {
                "type": "header",
                "session_id": log.session_id,
                "started_at": format_utc_ms(log.started_at),
                "mapping": log.mapping.to_wire(),
            },
        )

    def append_interval(self, session_id: str, interval: AnnotationInterval) -> None:
        self._append(session_id, {"type": "interval", **interval.to_dict()})

    def load(self, session_id: str) -> SessionLog:
        log = None
        with open(self.path_for(session_id), "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedRecord(f"line {line_no}: {exc}") from None
                kind = record.get("type")
                if kind == "header":
                    log = SessionLog(
                        session_id=record["session_id"],
                        started_at=parse_utc_ms(record["started_at"]),
                        mapping=LabelMapping.from_wire(record["mapping"]),
                        state=SessionState.STOPPED,
                    )
                elif kind == "interval":
                    if log is None:
                        raise MalformedRecord(f"line {line_no}: interval before header")
                    payload = {k: v for k, v in record.items() if k not in ("type", "duration_ms")}
                    log.intervals.append(AnnotationInterval.from_dict(payload))
                else:
                    raise MalformedRecord(f"line {line_no}: unknown record type {kind!r}")
        if log is None:
            raise MalformedRecord("no header record found")
        return log
