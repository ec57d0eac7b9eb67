"""Reader interaction telemetry: event log and usage statistics.

Events arrive from the UI (feature clicks, periodic scroll samples) and
append to a per-session JSONL log. Statistics are a pure replay of the
log: per-minute feature counts plus dwell times, where a dwell "stay" is
a maximal run of two or more consecutive scroll samples whose successive
positions move less than STAY_POSITION_DELTA.
"""

from __future__ import annotations

import json
import math
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EventValidationError

KINDS = (
    "key_question_click",
    "answer_gist_open",
    "section_gist_open",
    "term_definition_open",
    "scroll_sample",
    "jump_to_answer",
)

STAY_POSITION_DELTA = 0.005
MINUTE_MS = 60_000

_SESSION_ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")


@dataclass(frozen=True)
class TelemetryEvent:
    event_id: str
    timestamp_ms: int
    kind: str
    payload: dict


@dataclass
class SessionStats:
    session_id: str
    event_count: int = 0
    total_counts: dict = field(default_factory=dict)
    per_minute_counts: dict = field(default_factory=dict)  # minute -> kind -> n
    stay_count: int = 0
    dwell_mean_seconds: float = 0.0
    dwell_stdev_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "event_count": self.event_count,
            "total_counts": dict(self.total_counts),
            "per_minute_counts": {
                str(minute): dict(kinds)
                for minute, kinds in sorted(self.per_minute_counts.items())
            },
            "dwell": {
                "stay_count": self.stay_count,
                "mean_seconds": self.dwell_mean_seconds,
                "stdev_seconds": self.dwell_stdev_seconds,
            },
        }


def validate_session_id(session_id: str):
    if not _SESSION_ID_RE.match(session_id or ""):
        raise EventValidationError(
            "session id must match [A-Za-z0-9_-]{1,64}"
        )


def _require(cond: bool, reason: str):
    if not cond:
        raise EventValidationError(reason)


def _check_paragraph_ref(obj, label: str):
    _require(isinstance(obj, dict), f"{label} must be an object")
    _require(
        isinstance(obj.get("section_path"), str) and obj["section_path"],
        f"{label}.section_path must be a non-empty string",
    )
    _require(
        isinstance(obj.get("index"), int) and obj["index"] >= 0,
        f"{label}.index must be a non-negative integer",
    )


def validate_event(raw: dict) -> TelemetryEvent:
    """Check the wire shape and the kind-specific payload."""
    _require(isinstance(raw, dict), "event must be an object")
    _require(
        isinstance(raw.get("event_id"), str) and raw["event_id"],
        "event_id must be a non-empty string",
    )
    ts = raw.get("timestamp_ms")
    _require(
        isinstance(ts, int) and not isinstance(ts, bool) and ts >= 0,
        "timestamp_ms must be a non-negative integer",
    )
    kind = raw.get("kind")
    _require(kind in KINDS, f"unknown kind {kind!r}")
    payload = raw.get("payload")
    _require(isinstance(payload, dict), "payload must be an object")

    if kind in ("key_question_click", "jump_to_answer", "answer_gist_open"):
        _require(
            isinstance(payload.get("question_id"), str) and payload["question_id"],
            f"{kind} payload needs question_id",
        )
        if "paragraph" in payload:
            _check_paragraph_ref(payload["paragraph"], "payload.paragraph")
    elif kind == "section_gist_open":
        _require(
            isinstance(payload.get("section_path"), str) and payload["section_path"],
            "section_gist_open payload needs section_path",
        )
    elif kind == "term_definition_open":
        span = payload.get("span")
        _require(
            isinstance(span, list)
            and len(span) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) for v in span)
            and 0 <= span[0] < span[1],
            "term_definition_open payload needs span [start, end) with 0 <= start < end",
        )
    elif kind == "scroll_sample":
        pos = payload.get("position")
        _require(
            isinstance(pos, (int, float))
            and not isinstance(pos, bool)
            and 0.0 <= float(pos) <= 1.0,
            "scroll_sample position must be in [0, 1]",
        )
    return TelemetryEvent(raw["event_id"], ts, kind, payload)


class SessionLog:
    """Append-only JSONL log for one session; appends are serialized and
    idempotent on event_id."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._seen: set[str] = set()
        if self.path.exists():
            for event in self._read_raw():
                self._seen.add(event["event_id"])

    def _read_raw(self) -> list[dict]:
        records = []
        with self.path.open("r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records

    def record_event(self, raw: dict) -> bool:
        """Validate and append; returns False for a duplicate event_id."""
        event = validate_event(raw)
        with self._lock:
            if event.event_id in self._seen:
                return False
            record = {
                "event_id": event.event_id,
                "timestamp_ms": event.timestamp_ms,
                "kind": event.kind,
                "payload": event.payload,
            }
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
                handle.flush()
            self._seen.add(event.event_id)
        return True

    def events(self) -> list[TelemetryEvent]:
        """Events ordered by timestamp (stable on arrival order)."""
        if not self.path.exists():
            return []
        with self._lock:
            raw = self._read_raw()
        events = [
            TelemetryEvent(r["event_id"], r["timestamp_ms"], r["kind"], r["payload"])
            for r in raw
        ]
        events.sort(key=lambda e: e.timestamp_ms)
        return events


def compute_stats(session_id: str, events: list[TelemetryEvent]) -> SessionStats:
    """Pure replay of an event list into usage statistics."""
    stats = SessionStats(session_id=session_id, event_count=len(events))
    for event in events:
        minute = event.timestamp_ms // MINUTE_MS
        stats.total_counts[event.kind] = stats.total_counts.get(event.kind, 0) + 1
        bucket = stats.per_minute_counts.setdefault(minute, {})
        bucket[event.kind] = bucket.get(event.kind, 0) + 1

    samples = [
        (e.timestamp_ms, float(e.payload["position"]))
        for e in events
        if e.kind == "scroll_sample"
    ]
    durations: list[float] = []
    run_start = 0
    for i in range(1, len(samples) + 1):
        broken = (
            i == len(samples)
            or abs(samples[i][1] - samples[i - 1][1]) >= STAY_POSITION_DELTA
        )
        if broken:
            if i - run_start >= 2:  # single samples show no dwell evidence
                durations.append((samples[i - 1][0] - samples[run_start][0]) / 1000.0)
            run_start = i

    stats.stay_count = len(durations)
    if durations:
        mean = sum(durations) / len(durations)
        stats.dwell_mean_seconds = mean
        stats.dwell_stdev_seconds = math.sqrt(
            sum((d - mean) ** 2 for d in durations) / len(durations)
        )
    return stats


def session_stats(log: SessionLog, session_id: str) -> SessionStats:
    return compute_stats(session_id, log.events())
