"""Deterministic prompt assembly.

Section order is fixed — role, components, callable functions, standard
operating procedure, output instructions, event log — and the rendering is a
pure function of (config, events, epoch), so the same inputs always produce a
byte-identical prompt. That stability is what makes exported datasets
self-contained and fine-tuning prompts reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ..events import Event, render_event
from .config import AgentConfig

_EMPTY = "(none)"


@dataclass(frozen=True)
class AgentPrompt:
    text: str
    cursor: int  # seq of the last event included


def _bullet_section(title: str, entries: Iterable[str]) -> list[str]:
    lines = [f"# {title}"]
    entries = list(entries)
    if entries:
        lines.extend(f"- {e}" for e in entries)
    else:
        lines.append(_EMPTY)
    return lines


def build_prompt(
    config: AgentConfig, events: Sequence[Event], epoch_seconds: int = 12 * 3600
) -> AgentPrompt:
    """Assemble the full prompt for an agent over the given subscribed events."""
    lines: list[str] = []
    lines.append("# Role")
    lines.append(config.role_text if config.role_text else _EMPTY)
    lines.append("")
    lines.extend(_bullet_section("Components", config.component_descriptions))
    lines.append("")
    lines.extend(_bullet_section("Callable Functions", (f.render() for f in config.functions)))
    lines.append("")
    lines.extend(_bullet_section("Standard Operating Procedure", config.sop_entries))
    lines.append("")
    lines.extend(_bullet_section("Instructions", config.auxiliary_instructions))
    lines.append("")
    lines.append("# Event Log")
    if events:
        lines.extend(render_event(e, epoch_seconds) for e in events)
    else:
        lines.append(_EMPTY)
    cursor = events[-1].seq if events else 0
    return AgentPrompt(text="\n".join(lines), cursor=cursor)
