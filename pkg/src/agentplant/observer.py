"""Rules engine turning raw simulator changes into natural-language events.

Rules are plain data: a trigger (change kind plus field qualifiers) and one
text template per semantic level. All template validation happens at load time;
rendering at runtime can no longer fail. Function invocations bypass the rule
table: the call line and its acknowledgment are derived from the function
descriptor so that every command echoes identically everywhere.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .events import EventLogMemory, EventSource, SemanticLevel
from .sim.engine import RawChange

# Placeholders each change kind binds; templates may reference nothing else.
KIND_PLACEHOLDERS: dict[str, tuple[str, ...]] = {
    "sensor_detect": ("sensor", "track", "position", "entity_id", "entity_kind", "payload"),
    "sensor_passes": ("sensor", "track", "entity_id", "entity_kind", "payload"),
    "holder_captured": ("holder", "track", "entity_id", "entity_kind", "payload"),
    "holder_released": ("holder", "track"),
    "holder_engaged": ("holder", "track"),
    "run_started": ("track", "direction", "duration"),
    "run_done": ("track", "direction"),
    "robot_pick_started": ("shelf", "payload"),
    "robot_pick_done": ("shelf", "payload", "deposited_on"),
    "export_verified": ("entity_id", "payload"),
    "entity_placed": ("track", "position", "entity_id", "entity_kind", "payload"),
    "entity_removed": ("entity_id", "entity_kind", "payload"),
    "entity_departed": ("track", "entity_id", "entity_kind", "payload", "to_module"),
    "entity_transferred": ("track", "entity_id", "entity_kind", "payload", "from_module"),
    "inventory_answer": ("workpiece_name", "shelf"),
    "sensor_faulted": ("sensor",),
}

LEVEL_ORDER = (SemanticLevel.FIELD, SemanticLevel.CONTROL, SemanticLevel.PLANNING)

_PLACEHOLDER_RE = re.compile(r"{([A-Za-z_][A-Za-z0-9_]*)}")


@dataclass(frozen=True)
class ObserverRule:
    """Trigger pattern plus per-level text templates for one module's changes."""

    kind: str
    where: tuple[tuple[str, object], ...] = ()
    source: EventSource = EventSource.SYSTEM
    renderings: tuple[tuple[SemanticLevel, str], ...] = ()

    def matches(self, change: RawChange) -> bool:
        if change.kind != self.kind:
            return False
        return all(change.data.get(k) == v for k, v in self.where)

    def template_for(self, level: SemanticLevel) -> str | None:
        for lv, template in self.renderings:
            if lv == level:
                return template
        return None


@dataclass(frozen=True)
class RuleSet:
    """Ordered rules per module; first match wins per (module, level)."""

    modules: dict[str, tuple[ObserverRule, ...]] = field(default_factory=dict)

    def rules_for(self, module: str) -> tuple[ObserverRule, ...]:
        return self.modules.get(module, ())


def _render(template: str, change: RawChange) -> str:
    def sub(match: re.Match) -> str:
        value = change.data.get(match.group(1))
        return "" if value is None else str(value)

    return _PLACEHOLDER_RE.sub(sub, template)


def render_change(rules: RuleSet, change: RawChange) -> list[tuple[SemanticLevel, EventSource, str]]:
    """Pure rendering: (level, source, text) triples in field->control->planning order."""
    out: list[tuple[SemanticLevel, EventSource, str]] = []
    module_rules = rules.rules_for(change.module)
    for level in LEVEL_ORDER:
        for rule in module_rules:
            template = rule.template_for(level)
            if template is None or not rule.matches(change):
                continue
            out.append((level, rule.source, _render(template, change)))
            break
    return out


class Observer:
    """Routes simulator changes into the event log through the loaded rule set."""

    def __init__(self, rules: RuleSet, log: EventLogMemory):
        self.rules = rules
        self.log = log

    def on_change(self, change: RawChange, sim_time: int) -> list[int]:
        """Append the events a change produces; unmatched changes are silent."""
        if change.kind == "function_invoked":
            return self.function_call_events(
                change.module,
                change.data["call_text"],
                change.data["ack_text"],
                ack_source=EventSource(change.data.get("ack_source", "System")),
                ack_level=SemanticLevel(change.data.get("ack_level", "control")),
                sim_time=sim_time,
            )
        seqs = []
        for level, source, text in render_change(self.rules, change):
            seqs.append(self.log.append(change.module, source, level, text, sim_time))
        return seqs

    def on_changes(self, changes: list[RawChange], sim_time: int) -> list[int]:
        seqs: list[int] = []
        for change in changes:
            seqs.extend(self.on_change(change, sim_time))
        return seqs

    def function_call_events(
        self,
        module: str,
        call_text: str,
        ack_text: str,
        ack_source: EventSource = EventSource.SYSTEM,
        ack_level: SemanticLevel = SemanticLevel.CONTROL,
        sim_time: int = 0,
    ) -> list[int]:
        """The two lines every validated call produces: the call echo and its ack."""
        first = self.log.append(
            module,
            EventSource.OPERATOR,
            SemanticLevel.CONTROL,
            f"{module} calls function: {call_text}.",
            sim_time,
        )
        second = self.log.append(module, ack_source, ack_level, ack_text, sim_time)
        return [first, second]


def load_rules(source: str | dict | Path) -> RuleSet:
    """Parse and validate an observer rule document (JSON text, path, or dict)."""
    if isinstance(source, Path):
        source = source.read_text(encoding="utf-8")
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"invalid JSON: {exc}") from exc
    else:
        data = source
    if not isinstance(data, dict):
        raise ConfigError("$", "rule document must be an object")
    modules_data = data.get("modules", {})
    if not isinstance(modules_data, dict):
        raise ConfigError("modules", "expected object mapping module name to rule list")

    modules: dict[str, tuple[ObserverRule, ...]] = {}
    for module_name, rule_list in modules_data.items():
        rules: list[ObserverRule] = []
        seen: set[tuple] = set()
        for i, raw in enumerate(rule_list):
            path = f"modules.{module_name}[{i}]"
            trigger = raw.get("trigger")
            if not isinstance(trigger, dict) or "kind" not in trigger:
                raise ConfigError(path, "rule needs a trigger object with a 'kind'")
            kind = trigger["kind"]
            if kind not in KIND_PLACEHOLDERS:
                raise ConfigError(f"{path}.trigger.kind", f"unknown change kind {kind!r}")
            where = tuple(sorted(trigger.get("where", {}).items()))
            allowed = set(KIND_PLACEHOLDERS[kind])
            for field_name, _ in where:
                if field_name not in allowed:
                    raise ConfigError(
                        f"{path}.trigger.where", f"{kind} has no field {field_name!r}"
                    )
            renderings_data = raw.get("renderings", {})
            if not renderings_data:
                raise ConfigError(f"{path}.renderings", "rule needs at least one rendering")
            renderings: list[tuple[SemanticLevel, str]] = []
            for level_name, template in renderings_data.items():
                try:
                    level = SemanticLevel(level_name)
                except ValueError:
                    raise ConfigError(
                        f"{path}.renderings", f"unknown semantic level {level_name!r}"
                    ) from None
                for ph in _PLACEHOLDER_RE.findall(template):
                    if ph not in allowed:
                        raise ConfigError(
                            f"{path}.renderings.{level_name}",
                            f"placeholder {{{ph}}} is not bound by trigger kind {kind!r}",
                        )
                key = (kind, where, level)
                if key in seen:
                    raise ConfigError(
                        f"{path}.renderings.{level_name}",
                        f"duplicate (trigger, level) for kind {kind!r}",
                    )
                seen.add(key)
                renderings.append((level, template))
            try:
                source_val = EventSource(raw.get("source", "System"))
            except ValueError:
                raise ConfigError(f"{path}.source", f"unknown source {raw.get('source')!r}") from None
            rules.append(
                ObserverRule(
                    kind=kind, where=where, source=source_val, renderings=tuple(renderings)
                )
            )
        modules[module_name] = tuple(rules)
    return RuleSet(modules=modules)
