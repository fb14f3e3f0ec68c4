import pytest

from gesturelog.classifier import GestureClass
from gesturelog.replay import (
    ProtocolViolation,
    ReplayTrace,
    load_trace,
    replay,
    save_trace,
    script_trace,
    verify_csv_matches_intervals,
)
from gesturelog.segmenter import (
    AnnotationInterval,
    LabelMapping,
    SegmenterConfig,
    SessionLog,
    SessionState,
    export_csv,
    parse_utc_ms,
)
MAPPING = LabelMapping({GestureClass.FIST: "grab", GestureClass.PEACE: "point"})


def test_trace_round_trip(tmp_path):
    trace = script_trace([(GestureClass.FIST, 0.2), (None, 0.1)], MAPPING, seed=3)
    path = tmp_path / "trace.json"
    save_trace(trace, path)
    loaded = load_trace(path)
    assert loaded.frames == trace.frames
    assert loaded.fps == trace.fps
    assert loaded.mapping.to_wire() == MAPPING.to_wire()
    assert loaded.config is None


def test_trace_round_trip_with_config(tmp_path):
    cfg = SegmenterConfig(confidence_threshold=0.5, open_count=3, close_count=4)
    trace = script_trace([(GestureClass.FIST, 0.2)], MAPPING, config=cfg)
    path = tmp_path / "trace.json"
    save_trace(trace, path)
    assert load_trace(path).config == cfg


def test_trace_rejects_nonincreasing_timestamps():
    frames = [
        {"gap_ms": 0.0, "seq": 1, "t_capture_ms": 10, "hands": []},
        {"gap_ms": 33.0, "seq": 2, "t_capture_ms": 10, "hands": []},
    ]
    with pytest.raises(ValueError, match="strictly increase"):
        ReplayTrace(frames=frames, fps=30.0, mapping=MAPPING)


def test_trace_rejects_negative_gap():
    frames = [{"gap_ms": -1.0, "seq": 1, "t_capture_ms": 0, "hands": []}]
    with pytest.raises(ValueError, match="negative gap"):
        ReplayTrace(frames=frames, fps=30.0, mapping=MAPPING)


def test_trace_rejects_unknown_version(tmp_path):
    trace = script_trace([(GestureClass.FIST, 0.1)], MAPPING)
    path = tmp_path / "trace.json"
    save_trace(trace, path)
    doc = path.read_text().replace('"version": 1', '"version": 99')
    path.write_text(doc)
    with pytest.raises(ValueError, match="version"):
        load_trace(path)


def test_script_trace_shape_and_determinism():
    script = [(GestureClass.FIST, 1.0), (None, 0.5)]
    a = script_trace(script, MAPPING, fps=30.0, seed=7)
    b = script_trace(script, MAPPING, fps=30.0, seed=7)
    assert a.frames == b.frames
    assert len(a.frames) == 45
    assert all(len(fr["hands"]) == 1 for fr in a.frames[:30])
    assert all(fr["hands"] == [] for fr in a.frames[30:])
    assert [fr["seq"] for fr in a.frames] == list(range(1, 46))
    # capture clock follows the nominal frame rate
    assert a.frames[1]["t_capture_ms"] == 33
    assert a.frames[3]["t_capture_ms"] == 100


def test_replay_five_fist_frames_yields_one_interval(live_server):
    trace = script_trace([(GestureClass.FIST, 5 / 30)], MAPPING, seed=1)
    assert len(trace.frames) == 5
    report = replay(trace, live_server, speed=4.0)
    assert report.frames_sent == 5
    assert report.recognitions_received == 5
    assert len(report.intervals) == 1
    iv = report.intervals[0]
    assert iv["label"] == "grab"
    assert iv["gesture"] == "fist"
    assert iv["start_ms"] == 0
    assert iv["end_ms"] == 133
    assert iv["frame_count"] == 5
    assert report.e2e_latency["count"] == 5
    assert report.e2e_latency["p95"] > 0
    assert report.server_latency["count"] == 5
    d = report.to_dict()
    assert d["frames_sent"] == 5 and d["speed"] == 4.0


def test_replay_empty_trace(live_server):
    trace = ReplayTrace(frames=[], fps=30.0, mapping=MAPPING)
    report = replay(trace, live_server)
    assert report.frames_sent == 0
    assert report.recognitions_received == 0
    assert report.intervals == []
    assert report.e2e_latency["count"] == 0


def test_replay_speed_invariant_intervals(live_server):
    script = [(GestureClass.FIST, 0.5), (None, 0.4), (GestureClass.PEACE, 0.5)]
    trace = script_trace(script, MAPPING, seed=11)
    fast = replay(trace, live_server, speed=12.0)
    faster = replay(trace, live_server, speed=24.0)
    assert len(fast.intervals) == 2
    assert [iv["gesture"] for iv in fast.intervals] == ["fist", "peace"]
    assert fast.intervals == faster.intervals


def _stopped_log(intervals):
    return SessionLog(
        session_id="00112233445566778899aabbccddeeff",
        mapping=MAPPING,
        started_at=parse_utc_ms("2024-01-01T00:00:00.000Z"),
        state=SessionState.STOPPED,
        intervals=intervals,
    )


def _message_for(iv):
    return {
        "type": "interval",
        "label": iv.label,
        "gesture": iv.gesture.value,
        "start_ms": iv.start_ms,
        "end_ms": iv.end_ms,
        "duration_ms": iv.duration_ms,
        "mean_confidence": iv.mean_confidence,
        "frame_count": iv.frame_count,
    }


def test_verify_csv_accepts_matching_messages():
    iv = AnnotationInterval(
        label="grab",
        gesture=GestureClass.FIST,
        start_ms=0,
        end_ms=133,
        mean_confidence=0.9,
        frame_count=5,
    )
    csv_bytes = export_csv(_stopped_log([iv]))
    verify_csv_matches_intervals(csv_bytes, [_message_for(iv)])


def test_verify_csv_rejects_count_mismatch():
    iv = AnnotationInterval(
        label="grab",
        gesture=GestureClass.FIST,
        start_ms=0,
        end_ms=133,
        mean_confidence=0.9,
        frame_count=5,
    )
    csv_bytes = export_csv(_stopped_log([iv]))
    with pytest.raises(ProtocolViolation, match="intervals"):
        verify_csv_matches_intervals(csv_bytes, [])


def test_verify_csv_rejects_field_mismatch():
    iv = AnnotationInterval(
        label="grab",
        gesture=GestureClass.FIST,
        start_ms=0,
        end_ms=133,
        mean_confidence=0.9,
        frame_count=5,
    )
    csv_bytes = export_csv(_stopped_log([iv]))
    msg = _message_for(iv)
    msg["end_ms"] = 166
    with pytest.raises(ProtocolViolation, match="does not match"):
        verify_csv_matches_intervals(csv_bytes, [msg])
