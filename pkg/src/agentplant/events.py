"""Append-only event log with a simulated clock and subscription-filtered views.

Every state change in the plant ends up here as one timestamped, scoped line of
natural language. The log is the only channel through which agents observe the
world, so ordering is strict: ``seq`` is the authoritative total order and the
displayed second-resolution timestamp is presentation metadata.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Iterator


class SemanticLevel(Enum):
    """Abstraction level of an event text, from device signals up to production planning."""

    FIELD = "field"
    CONTROL = "control"
    PLANNING = "planning"


class EventSource(Enum):
    """Who authored an event line."""

    SYSTEM = "System"
    OPERATOR = "Operator"
    MANAGER = "Manager"
    USER = "User"
    # Summaries are fed back into the log so later readers see them; this is an
    # interpretation choice, the reporting channel could also stay out-of-band.
    SUMMARIZER = "Summarizer"


_LINE_RE = re.compile(r"^\[([^\]]+)\]\[([^\]]+)\]\[(\d{2}):(\d{2}):(\d{2})\] (.*)$")


def parse_epoch(text: str) -> int:
    """Parse an ``HH:MM:SS`` display origin into seconds since midnight."""
    m = re.fullmatch(r"(\d{2}):(\d{2}):(\d{2})", text)
    if m is None:
        raise ValueError(f"bad epoch {text!r}, expected HH:MM:SS")
    h, mi, s = (int(g) for g in m.groups())
    if h > 23 or mi > 59 or s > 59:
        raise ValueError(f"bad epoch {text!r}")
    return h * 3600 + mi * 60 + s


def format_clock(epoch_seconds: int, sim_time: int) -> str:
    """Render ``epoch + sim_time`` as zero-padded 24-hour HH:MM:SS (wraps at midnight)."""
    total = (epoch_seconds + sim_time) % 86400
    return f"{total // 3600:02d}:{total % 3600 // 60:02d}:{total % 60:02d}"


@dataclass(frozen=True)
class Event:
    """One recorded state change."""

    seq: int
    sim_time: int
    scope: str
    source: EventSource
    level: SemanticLevel
    text: str

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "sim_time": self.sim_time,
            "scope": self.scope,
            "source": self.source.value,
            "level": self.level.value,
            "text": self.text,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Event":
        return cls(
            seq=int(data["seq"]),
            sim_time=int(data["sim_time"]),
            scope=data["scope"],
            source=EventSource(data["source"]),
            level=SemanticLevel(data["level"]),
            text=data["text"],
        )


def render_event(event: Event, epoch_seconds: int) -> str:
    """Render the canonical ``[scope][source][HH:MM:SS] text`` line."""
    return (
        f"[{event.scope}][{event.source.value}]"
        f"[{format_clock(epoch_seconds, event.sim_time)}] {event.text}"
    )


def parse_event_line(line: str) -> tuple[str, str, str, str]:
    """Split a rendered line into (scope, source, HH:MM:SS, text). Raises ValueError."""
    m = _LINE_RE.match(line)
    if m is None:
        raise ValueError(f"not a rendered event line: {line!r}")
    scope, source, h, mi, s, text = m.groups()
    return scope, source, f"{h}:{mi}:{s}", text


@dataclass(frozen=True)
class SubscriptionFilter:
    """One clause of a subscription: scope name or ``*``, plus optional source/level sets.

    ``sources``/``levels`` of ``None`` mean "all".
    """

    scope: str = "*"
    sources: frozenset[EventSource] | None = None
    levels: frozenset[SemanticLevel] | None = None

    def matches(self, event: Event) -> bool:
        if self.scope != "*" and self.scope != event.scope:
            return False
        if self.sources is not None and event.source not in self.sources:
            return False
        if self.levels is not None and event.level not in self.levels:
            return False
        return True

    def to_dict(self) -> dict:
        out: dict = {"scope": self.scope}
        if self.sources is not None:
            out["sources"] = sorted(s.value for s in self.sources)
        if self.levels is not None:
            out["levels"] = sorted(lv.value for lv in self.levels)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SubscriptionFilter":
        sources = data.get("sources")
        levels = data.get("levels")
        return cls(
            scope=data.get("scope", "*"),
            sources=None if sources is None else frozenset(EventSource(s) for s in sources),
            levels=None if levels is None else frozenset(SemanticLevel(lv) for lv in levels),
        )


@dataclass(frozen=True)
class Subscription:
    """A selective view over the log: an event is included iff at least one filter matches.

    An empty filter tuple therefore selects nothing.
    """

    filters: tuple[SubscriptionFilter, ...] = ()

    def matches(self, event: Event) -> bool:
        return any(f.matches(event) for f in self.filters)

    def to_list(self) -> list[dict]:
        return [f.to_dict() for f in self.filters]

    @classmethod
    def from_list(cls, data: Iterable[dict]) -> "Subscription":
        return cls(filters=tuple(SubscriptionFilter.from_dict(d) for d in data))


class EventLogMemory:
    """Append-only, totally ordered event store with synchronous subscriber fan-out.

    Appends must come from a single writer (the session loop); notification
    callbacks run in seq order on the appending thread, so a subscriber never
    observes events out of order or concurrently with itself.
    """

    def __init__(self, epoch: str = "12:00:00"):
        self.epoch = epoch
        self.epoch_seconds = parse_epoch(epoch)
        self._events: list[Event] = []
        self._listeners: list[Callable[[Event], None]] = []

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[Event]:
        return iter(list(self._events))

    @property
    def last_seq(self) -> int:
        return len(self._events)

    @property
    def last_sim_time(self) -> int:
        return self._events[-1].sim_time if self._events else 0

    def append(
        self,
        scope: str,
        source: EventSource,
        level: SemanticLevel,
        text: str,
        sim_time: int,
    ) -> int:
        """Store one event and return its seq. Rejects clock regressions and multi-line text."""
        if not text:
            raise ValueError("event text must be non-empty")
        if "\n" in text or "\r" in text:
            raise ValueError("event text must not contain line breaks")
        if self._events and sim_time < self._events[-1].sim_time:
            raise ValueError(
                f"sim_time regression: {sim_time} < {self._events[-1].sim_time} "
                "(simulator clock bug)"
            )
        event = Event(
            seq=len(self._events) + 1,
            sim_time=sim_time,
            scope=scope,
            source=source,
            level=level,
            text=text,
        )
        self._events.append(event)
        for listener in list(self._listeners):
            listener(event)
        return event.seq

    def subscribe_listener(self, callback: Callable[[Event], None]) -> Callable[[], None]:
        """Register an ordered fan-out callback; returns an unsubscribe function."""
        self._listeners.append(callback)

        def cancel() -> None:
            if callback in self._listeners:
                self._listeners.remove(callback)

        return cancel

    def view(self, subscription: Subscription, from_seq: int = 0) -> list[Event]:
        """All matching events with seq > from_seq, in seq order (a fresh list)."""
        if from_seq < 0:
            raise ValueError("from_seq must be >= 0")
        return [e for e in self._events[from_seq:] if subscription.matches(e)]

    def events_after(self, from_seq: int = 0) -> list[Event]:
        return list(self._events[from_seq:])

    def render(self, event: Event) -> str:
        return render_event(event, self.epoch_seconds)

    def rendered_lines(self, events: Iterable[Event] | None = None) -> list[str]:
        return [self.render(e) for e in (self._events if events is None else events)]

    def write_files(self, directory: str | Path, stem: str = "events") -> tuple[Path, Path]:
        """Persist the log: rendered ``<stem>.log`` plus a JSONL sidecar with full fields."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        log_path = directory / f"{stem}.log"
        jsonl_path = directory / f"{stem}.jsonl"
        with open(log_path, "w", encoding="utf-8") as fh:
            for event in self._events:
                fh.write(self.render(event) + "\n")
        with open(jsonl_path, "w", encoding="utf-8") as fh:
            for event in self._events:
                fh.write(json.dumps(event.to_dict(), ensure_ascii=False) + "\n")
        return log_path, jsonl_path
