"""Pluggable completion backends.

Two families: ``scripted`` backends are deterministic stand-ins used for
testing, recording replay, and as the SOP oracle; ``remote`` talks to any
HTTP service speaking the common chat-completion shape.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import requests

from ..errors import BackendError, ConfigError
from .commands import NO_ACTION, _render_arg

_TEMPLATE_RE = re.compile(r"{([A-Za-z_][A-Za-z0-9_]*)(:q)?}")


@dataclass(frozen=True)
class BackendDescriptor:
    name: str
    kind: str  # scripted | remote


class LLMBackend(Protocol):
    descriptor: BackendDescriptor

    def complete(
        self,
        prompt: str,
        *,
        agent_id: str | None = None,
        new_events: Sequence[str] | None = None,
    ) -> str:
        """Return the raw completion text for a single-turn prompt."""
        ...  # pragma: no cover


def output_json(reason: str, command: str) -> str:
    return json.dumps({"reason": reason, "command": command})


class ScriptedBackend:
    """Deterministic map keyed by (agent id, new-event window), with a prompt-text
    fallback map and an optional default response."""

    def __init__(self, name: str, default: str | None = None):
        self.descriptor = BackendDescriptor(name=name, kind="scripted")
        self.default = default
        self._by_window: dict[tuple[str, tuple[str, ...]], str] = {}
        self._by_prompt: dict[str, str] = {}

    def program(self, agent_id: str, new_event_texts: Sequence[str], response: str) -> None:
        self._by_window[(agent_id, tuple(new_event_texts))] = response

    def program_prompt(self, prompt: str, response: str) -> None:
        self._by_prompt[prompt] = response

    def complete(
        self,
        prompt: str,
        *,
        agent_id: str | None = None,
        new_events: Sequence[str] | None = None,
    ) -> str:
        # The full prompt is the more specific key: identical windows can occur
        # in different histories with different correct reactions.
        hit = self._by_prompt.get(prompt)
        if hit is not None:
            return hit
        if agent_id is not None and new_events is not None:
            hit = self._by_window.get((agent_id, tuple(new_events)))
            if hit is not None:
                return hit
        if self.default is not None:
            return self.default
        raise BackendError(
            f"scripted backend {self.descriptor.name!r} has no response for this window"
        )


@dataclass(frozen=True)
class OracleRule:
    pattern: re.Pattern
    reason: str
    command: str


class RuleOracleBackend:
    """SOP oracle: ordered condition->action rules over the new-event window.

    The first rule whose pattern matches any window line fires; named capture
    groups substitute into the reason/command templates (``{name}`` plain,
    ``{name:q}`` as a quoted command-string literal). No match falls through to
    the default response, normally no_action.
    """

    def __init__(
        self,
        name: str,
        rules: Sequence[OracleRule],
        default_reason: str = "No action required for these events",
        default_command: str = NO_ACTION,
    ):
        self.descriptor = BackendDescriptor(name=name, kind="scripted")
        self.rules = list(rules)
        self.default_reason = default_reason
        self.default_command = default_command

    def complete(
        self,
        prompt: str,
        *,
        agent_id: str | None = None,
        new_events: Sequence[str] | None = None,
    ) -> str:
        window = list(new_events) if new_events is not None else _window_from_prompt(prompt)
        for rule in self.rules:
            for line in window:
                m = rule.pattern.search(line)
                if m is None:
                    continue
                groups = m.groupdict()
                return output_json(
                    _substitute(rule.reason, groups), _substitute(rule.command, groups)
                )
        return output_json(self.default_reason, self.default_command)


def _substitute(template: str, groups: dict[str, str]) -> str:
    def sub(match: re.Match) -> str:
        value = groups.get(match.group(1))
        if value is None:
            raise BackendError(f"oracle template references unknown capture {match.group(1)!r}")
        return _render_arg(value) if match.group(2) else value

    return _TEMPLATE_RE.sub(sub, template)


def _window_from_prompt(prompt: str) -> list[str]:
    # Fallback when no window metadata is supplied: match against the event
    # section at the end of the prompt.
    marker = "\n# Event Log\n"
    idx = prompt.rfind(marker)
    if idx < 0:
        return [prompt]
    return prompt[idx + len(marker):].splitlines()


class RemoteBackend:
    """Single-turn HTTP chat-completion client (OpenAI-compatible request shape)."""

    def __init__(
        self,
        name: str,
        url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        temperature: float = 0.0,
        max_tokens: int = 512,
        context_limit_chars: int = 60000,
        timeout: float = 60.0,
    ):
        self.descriptor = BackendDescriptor(name=name, kind="remote")
        self.url = url or os.environ.get("AGENTPLANT_LLM_URL", "")
        self.model = model or os.environ.get("AGENTPLANT_LLM_MODEL", "")
        self.api_key = api_key or os.environ.get("AGENTPLANT_LLM_API_KEY", "")
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.context_limit_chars = context_limit_chars
        self.timeout = timeout

    def complete(
        self,
        prompt: str,
        *,
        agent_id: str | None = None,
        new_events: Sequence[str] | None = None,
    ) -> str:
        if not self.url:
            raise BackendError("remote backend has no endpoint URL configured")
        if len(prompt) > self.context_limit_chars:
            # Refused locally: an oversized prompt would be truncated or billed
            # pointlessly; the caller should shrink the subscription instead.
            raise BackendError(
                f"prompt of {len(prompt)} chars exceeds configured context limit "
                f"of {self.context_limit_chars}"
            )
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        try:
            response = requests.post(
                self.url, json=payload, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise BackendError(f"request failed: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(f"HTTP {response.status_code}: {response.text[:200]}")
        try:
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion response: {exc}") from exc


def load_backends(source: str | dict | Path) -> dict[str, object]:
    """Build the backend registry from its JSON configuration."""
    if isinstance(source, Path):
        source = source.read_text(encoding="utf-8")
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"invalid JSON: {exc}") from exc
    else:
        data = source
    backends_data = data.get("backends")
    if not isinstance(backends_data, dict):
        raise ConfigError("backends", "expected object mapping backend name to config")

    registry: dict[str, object] = {}
    for name, cfg in backends_data.items():
        path = f"backends.{name}"
        kind = cfg.get("kind")
        if kind == "scripted":
            style = cfg.get("style", "map")
            if style == "rules":
                rules = []
                for i, r in enumerate(cfg.get("rules", [])):
                    try:
                        pattern = re.compile(r["pattern"])
                    except re.error as exc:
                        raise ConfigError(f"{path}.rules[{i}].pattern", str(exc)) from exc
                    rules.append(
                        OracleRule(pattern=pattern, reason=r["reason"], command=r["command"])
                    )
                default = cfg.get("default", {})
                registry[name] = RuleOracleBackend(
                    name,
                    rules,
                    default_reason=default.get("reason", "No action required for these events"),
                    default_command=default.get("command", NO_ACTION),
                )
            elif style == "map":
                backend = ScriptedBackend(name, default=cfg.get("default_text"))
                for i, entry in enumerate(cfg.get("responses", [])):
                    backend.program(entry["agent"], entry["window"], entry["response"])
                registry[name] = backend
            else:
                raise ConfigError(f"{path}.style", f"unknown scripted style {style!r}")
        elif kind == "remote":
            registry[name] = RemoteBackend(
                name,
                url=cfg.get("url"),
                model=cfg.get("model"),
                api_key=cfg.get("api_key"),
                temperature=cfg.get("temperature", 0.0),
                max_tokens=cfg.get("max_tokens", 512),
                context_limit_chars=cfg.get("context_limit_chars", 60000),
                timeout=cfg.get("timeout", 60.0),
            )
        else:
            raise ConfigError(f"{path}.kind", f"unknown backend kind {kind!r}")
    return registry
