"""Dataset algebra: test point -> test case -> test suite -> dataset.

A test point is an agent prompt split into the already-seen prefix and the new
events the agent must react to; a case adds the reference output; suites group
the cases of one operational scenario; a dataset is a collection of suites
self-contained enough to rebuild every prompt byte-identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..agents.commands import AgentOutput, FunctionCall
from ..agents.config import AgentConfig
from ..errors import DatasetError
from ..events import Event


class Category(Enum):
    ROUTINE = "routine"
    UNEXPECTED = "unexpected"


@dataclass(frozen=True)
class TestPoint:
    """Prompt material for one reaction: everything seen so far plus k >= 1 new events."""

    agent_config_ref: str
    prefix_events: tuple[Event, ...]
    new_events: tuple[Event, ...]

    def __post_init__(self) -> None:
        if not self.new_events:
            raise DatasetError("a test point needs at least one new event")
        seqs = [e.seq for e in (*self.prefix_events, *self.new_events)]
        if any(b <= a for a, b in zip(seqs, seqs[1:])):
            raise DatasetError("test point events must be in strictly increasing seq order")

    def all_events(self) -> tuple[Event, ...]:
        return (*self.prefix_events, *self.new_events)

    def window_texts(self) -> tuple[str, ...]:
        return tuple(e.text for e in self.new_events)


@dataclass(frozen=True)
class TestCase:
    id: str
    point: TestPoint
    expected_reason: str
    expected_command: FunctionCall | None  # None encodes no_action
    category: Category
    issued_at: int | None = None  # sim second the reference command was issued

    def expected_output(self) -> AgentOutput:
        return AgentOutput(reason=self.expected_reason, command=self.expected_command)


@dataclass(frozen=True)
class TestSuite:
    """Ordered cases of one task scenario; per agent the event windows advance strictly."""

    name: str
    task_description: str
    cases: tuple[TestCase, ...]
    replay_meta: dict | None = None

    def __post_init__(self) -> None:
        last_end: dict[str, int] = {}
        for case in self.cases:
            ref = case.point.agent_config_ref
            start = case.point.new_events[0].seq
            if ref in last_end and start <= last_end[ref]:
                raise DatasetError(
                    f"suite {self.name!r}: case {case.id!r} window does not advance"
                )
            last_end[ref] = case.point.new_events[-1].seq


@dataclass(frozen=True)
class Dataset:
    name: str
    suites: tuple[TestSuite, ...]
    agent_configs: dict[str, AgentConfig] = field(default_factory=dict)
    epoch: str = "12:00:00"
    provenance: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for suite in self.suites:
            for case in suite.cases:
                if case.point.agent_config_ref not in self.agent_configs:
                    raise DatasetError(
                        f"case {case.id!r} references unknown agent config "
                        f"{case.point.agent_config_ref!r}"
                    )

    def all_cases(self) -> list[TestCase]:
        return [case for suite in self.suites for case in suite.cases]

    def manifest(self) -> dict:
        cases = self.all_cases()
        routine = sum(1 for c in cases if c.category is Category.ROUTINE)
        unexpected = len(cases) - routine
        return {
            "suites": len(self.suites),
            "cases": len(cases),
            "routine": routine,
            "unexpected": unexpected,
            "routine_ratio": round(routine / len(cases), 4) if cases else None,
            "unexpected_ratio": round(unexpected / len(cases), 4) if cases else None,
            "provenance": list(self.provenance),
        }
