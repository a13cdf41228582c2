"""Event-driven agent stepping: window capture, completion, parsing, dispatch hand-off.

A step is split into ``prepare`` (capture the new-event window and build the
prompt) and ``conclude`` (parse the completion and advance the cursor) so a
session can run the backend call inline in lockstep mode or on a worker thread
in real-time mode. Parse failures never reach dispatch: they are recorded as
rejection events and the window is consumed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

from ..errors import BackendError, InvalidStateError, OutputParseError
from ..events import Event, EventLogMemory, EventSource, SemanticLevel
from .backends import LLMBackend
from .commands import AgentOutput, parse_output
from .config import AgentConfig, AgentRole
from .prompt import AgentPrompt, build_prompt

logger = logging.getLogger(__name__)

EmitEvent = Callable[[str], None]


@dataclass(frozen=True)
class StepRequest:
    agent_id: str
    prompt: AgentPrompt
    window: tuple[Event, ...]
    window_texts: tuple[str, ...]
    cursor_before: int


class AgentRuntime:
    """One agent's live state: its config, backend, and read cursor into the log."""

    def __init__(self, config: AgentConfig, backend: LLMBackend, log: EventLogMemory):
        self.config = config
        self.backend = backend
        self.log = log
        self.cursor = 0

    def pending_events(self) -> list[Event]:
        return self.log.view(self.config.subscription, self.cursor)

    def prepare(self) -> StepRequest | None:
        """Capture the current window and prompt; None when nothing new arrived."""
        window = self.pending_events()
        if not window:
            return None
        full_view = self.log.view(self.config.subscription, 0)
        prompt = build_prompt(self.config, full_view, self.log.epoch_seconds)
        return StepRequest(
            agent_id=self.config.id,
            prompt=prompt,
            window=tuple(window),
            window_texts=tuple(e.text for e in window),
            cursor_before=self.cursor,
        )

    def complete(self, request: StepRequest) -> str:
        """Run the backend over a prepared request, retrying once on failure."""
        try:
            return self.backend.complete(
                request.prompt.text,
                agent_id=self.config.id,
                new_events=request.window_texts,
            )
        except BackendError as first:
            logger.warning("backend %s failed for %s, retrying once: %s",
                           self.backend.descriptor.name, self.config.id, first)
            return self.backend.complete(
                request.prompt.text,
                agent_id=self.config.id,
                new_events=request.window_texts,
            )

    def conclude(
        self, request: StepRequest, raw: str | Exception, emit_event: EmitEvent | None = None
    ) -> AgentOutput | None:
        """Parse the completion (or record the failure) and consume the window."""
        self.cursor = request.prompt.cursor
        if isinstance(raw, Exception):
            # Second failure in a row: skip this window rather than stall the loop.
            if emit_event is not None:
                emit_event(f"agent backend error: {raw}")
            return None
        try:
            return parse_output(raw)
        except OutputParseError as exc:
            if emit_event is not None:
                emit_event(f"agent output rejected: {exc}")
            return None

    def step(
        self,
        dispatch: Callable[[AgentOutput], None],
        emit_event: EmitEvent | None = None,
    ) -> AgentOutput | None:
        """Synchronous prepare->complete->parse->dispatch cycle (lockstep path)."""
        request = self.prepare()
        if request is None:
            return None
        try:
            raw: str | Exception = self.complete(request)
        except BackendError as exc:
            raw = exc
        output = self.conclude(request, raw, emit_event)
        if output is not None and not output.is_no_action:
            dispatch(output)
        return output

    def summarize(self) -> tuple[str, AgentPrompt]:
        """Produce a report over the full subscribed view; rejected when empty."""
        if self.config.role is not AgentRole.SUMMARIZER:
            raise InvalidStateError(f"agent {self.config.id!r} is not a summarizer")
        view = self.log.view(self.config.subscription, 0)
        if not view:
            raise InvalidStateError("nothing to summarize: the subscribed view is empty")
        prompt = build_prompt(self.config, view, self.log.epoch_seconds)
        text = self.backend.complete(
            prompt.text, agent_id=self.config.id, new_events=tuple(e.text for e in view)
        )
        return text, prompt


def sanitize_summary(text: str) -> str:
    """Collapse a free-text summary to the single-line form the log requires."""
    return " ".join(text.split()) or "(empty summary)"


def append_summary(
    log: EventLogMemory, config: AgentConfig, text: str, sim_time: int
) -> int:
    return log.append(
        config.scope_label,
        EventSource.SUMMARIZER,
        SemanticLevel.PLANNING,
        sanitize_summary(text),
        sim_time,
    )
