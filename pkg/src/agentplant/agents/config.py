"""Agent definitions: role, module binding, prompt material, subscription, backend."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from ..errors import ConfigError
from ..events import Subscription
from ..sim.layout import LayoutConfig

_CALL_MENTION_RE = re.compile(r"\b([A-Za-z_][A-Za-z0-9_]*)\(")


class AgentRole(Enum):
    MANAGER = "manager"
    OPERATOR = "operator"
    SUMMARIZER = "summarizer"


@dataclass(frozen=True)
class PromptFunction:
    """One callable as it appears in the prompt: signature line plus documentation."""

    signature: str
    doc: str
    name: str

    def render(self) -> str:
        return f"{self.signature} - {self.doc}"


# Managers plan; their only levers are task assignment and completion marking.
MANAGER_FUNCTIONS = (
    PromptFunction(
        signature="assign_task(module, task_text)",
        doc="Assign a task to the operator agent of the named automation module.",
        name="assign_task",
    ),
    PromptFunction(
        signature="mark_task_done(task_text)",
        doc="Mark a previously assigned task as completed.",
        name="mark_task_done",
    ),
)


@dataclass(frozen=True)
class AgentConfig:
    id: str
    role: AgentRole
    scope_label: str
    module_binding: str | None = None
    role_text: str = ""
    component_descriptions: tuple[str, ...] = ()
    functions: tuple[PromptFunction, ...] = ()
    sop_entries: tuple[str, ...] = ()
    auxiliary_instructions: tuple[str, ...] = ()
    subscription: Subscription = field(default_factory=Subscription)
    backend_ref: str = ""

    def function_names(self) -> set[str]:
        return {f.name for f in self.functions}

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "role": self.role.value,
            "scope_label": self.scope_label,
            "module_binding": self.module_binding,
            "role_text": self.role_text,
            "component_descriptions": list(self.component_descriptions),
            "functions": [
                {"signature": f.signature, "doc": f.doc, "name": f.name} for f in self.functions
            ],
            "sop_entries": list(self.sop_entries),
            "auxiliary_instructions": list(self.auxiliary_instructions),
            "subscription": self.subscription.to_list(),
            "backend_ref": self.backend_ref,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AgentConfig":
        return cls(
            id=data["id"],
            role=AgentRole(data["role"]),
            scope_label=data["scope_label"],
            module_binding=data.get("module_binding"),
            role_text=data.get("role_text", ""),
            component_descriptions=tuple(data.get("component_descriptions", [])),
            functions=tuple(
                PromptFunction(signature=f["signature"], doc=f["doc"], name=f["name"])
                for f in data.get("functions", [])
            ),
            sop_entries=tuple(data.get("sop_entries", [])),
            auxiliary_instructions=tuple(data.get("auxiliary_instructions", [])),
            subscription=Subscription.from_list(data.get("subscription", [])),
            backend_ref=data.get("backend_ref", ""),
        )


def _validate_sop_mentions(config: AgentConfig, path: str) -> None:
    known = config.function_names() | {"no_action"}
    for i, entry in enumerate(config.sop_entries):
        for name in _CALL_MENTION_RE.findall(entry):
            if name not in known:
                raise ConfigError(
                    f"{path}.sop_entries[{i}]",
                    f"SOP mentions {name}() which is not a callable function of this agent",
                )


def load_agent_configs(
    source: str | dict | Path, layout: LayoutConfig
) -> dict[str, AgentConfig]:
    """Parse agent configuration, resolving operator function lists from the layout."""
    if isinstance(source, Path):
        source = source.read_text(encoding="utf-8")
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"invalid JSON: {exc}") from exc
    else:
        data = source
    agents_data = data.get("agents")
    if not isinstance(agents_data, list):
        raise ConfigError("agents", "expected a list of agent objects")

    configs: dict[str, AgentConfig] = {}
    for i, raw in enumerate(agents_data):
        path = f"agents[{i}]"
        agent_id = raw.get("id")
        if not agent_id:
            raise ConfigError(f"{path}.id", "agent needs an id")
        if agent_id in configs:
            raise ConfigError(f"{path}.id", f"duplicate agent id {agent_id!r}")
        try:
            role = AgentRole(raw.get("role", ""))
        except ValueError:
            raise ConfigError(f"{path}.role", f"unknown role {raw.get('role')!r}") from None

        module_binding = raw.get("module_binding")
        functions: tuple[PromptFunction, ...]
        if role is AgentRole.OPERATOR:
            if not module_binding:
                raise ConfigError(f"{path}.module_binding", "operators bind to exactly one module")
            try:
                module = layout.module(module_binding)
            except KeyError:
                raise ConfigError(
                    f"{path}.module_binding", f"unknown module {module_binding!r}"
                ) from None
            spec = raw.get("functions", "module")
            if spec == "module":
                functions = tuple(
                    PromptFunction(signature=f.signature(), doc=f.doc, name=f.name)
                    for f in module.functions
                )
            else:
                functions = tuple(
                    PromptFunction(signature=f["signature"], doc=f["doc"], name=f["name"])
                    for f in spec
                )
        elif role is AgentRole.MANAGER:
            if raw.get("functions") not in (None, "manager"):
                raise ConfigError(
                    f"{path}.functions", "manager functions are fixed to assign/mark-done"
                )
            functions = MANAGER_FUNCTIONS
            module_binding = None
        else:
            functions = ()
            module_binding = None

        config = AgentConfig(
            id=agent_id,
            role=role,
            scope_label=raw.get("scope_label") or module_binding or agent_id,
            module_binding=module_binding,
            role_text=raw.get("role_text", ""),
            component_descriptions=tuple(raw.get("component_descriptions", [])),
            functions=functions,
            sop_entries=tuple(raw.get("sop_entries", [])),
            auxiliary_instructions=tuple(raw.get("auxiliary_instructions", [])),
            subscription=Subscription.from_list(raw.get("subscription", [])),
            backend_ref=raw.get("backend", ""),
        )
        _validate_sop_mentions(config, path)
        configs[agent_id] = config
    return configs
