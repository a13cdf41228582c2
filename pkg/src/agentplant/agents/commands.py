"""The single-command output contract: ``{"reason": ..., "command": ...}``.

The command string grammar is deliberately tiny: an identifier followed by a
parenthesised list of single-quoted strings and integers. Matching for
evaluation is structural (parsed name + argument list), never raw string
equality, so spacing and quote style cannot fail a test case.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from ..errors import BadCommandSyntaxError, MalformedOutputError

NO_ACTION = "no_action"

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT_RE = re.compile(r"-?\d+")


@dataclass(frozen=True)
class FunctionCall:
    """A parsed command: function name plus ordered string/integer arguments."""

    name: str
    args: tuple[str | int, ...] = ()

    def __post_init__(self) -> None:
        if _NAME_RE.fullmatch(self.name) is None:
            raise BadCommandSyntaxError(f"bad function name {self.name!r}")
        for a in self.args:
            if not isinstance(a, (str, int)) or isinstance(a, bool):
                raise BadCommandSyntaxError(f"bad argument {a!r} (only str/int allowed)")

    def render(self) -> str:
        return f"{self.name}({', '.join(_render_arg(a) for a in self.args)})"

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.render()


def _render_arg(value: str | int) -> str:
    if isinstance(value, int):
        return str(value)
    escaped = value.replace("\\", "\\\\")
    if "'" not in value:
        return f"'{escaped}'"
    if '"' not in value:
        return f'"{escaped}"'
    return "'" + escaped.replace("'", "\\'") + "'"


def parse_function_call(text: str) -> FunctionCall:
    """Parse a command string; raises BadCommandSyntaxError on any deviation."""
    s = text.strip()
    pos = 0

    def skip_ws(p: int) -> int:
        while p < len(s) and s[p] in " \t":
            p += 1
        return p

    m = _NAME_RE.match(s, pos)
    if m is None:
        raise BadCommandSyntaxError(f"expected function name in {text!r}")
    name = m.group(0)
    pos = skip_ws(m.end())
    if pos >= len(s) or s[pos] != "(":
        raise BadCommandSyntaxError(f"expected '(' after name in {text!r}")
    pos = skip_ws(pos + 1)

    args: list[str | int] = []
    if pos < len(s) and s[pos] == ")":
        pos += 1
    else:
        while True:
            if pos >= len(s):
                raise BadCommandSyntaxError(f"unterminated argument list in {text!r}")
            ch = s[pos]
            if ch in "'\"":
                value, pos = _parse_string(s, pos, text)
                args.append(value)
            else:
                m = _INT_RE.match(s, pos)
                if m is None:
                    raise BadCommandSyntaxError(f"bad argument at offset {pos} in {text!r}")
                args.append(int(m.group(0)))
                pos = m.end()
            pos = skip_ws(pos)
            if pos < len(s) and s[pos] == ",":
                pos = skip_ws(pos + 1)
                continue
            if pos < len(s) and s[pos] == ")":
                pos += 1
                break
            raise BadCommandSyntaxError(f"expected ',' or ')' at offset {pos} in {text!r}")

    if s[skip_ws(pos):]:
        raise BadCommandSyntaxError(f"trailing characters after call in {text!r}")
    return FunctionCall(name=name, args=tuple(args))


def _parse_string(s: str, pos: int, original: str) -> tuple[str, int]:
    quote = s[pos]
    pos += 1
    out: list[str] = []
    while pos < len(s):
        ch = s[pos]
        if ch == "\\" and pos + 1 < len(s) and s[pos + 1] in ("\\", "'", '"'):
            out.append(s[pos + 1])
            pos += 2
            continue
        if ch == quote:
            return "".join(out), pos + 1
        out.append(ch)
        pos += 1
    raise BadCommandSyntaxError(f"unterminated string in {original!r}")


@dataclass(frozen=True)
class AgentOutput:
    """An accepted agent response: free-text reason plus a command or the no-action sentinel."""

    reason: str
    command: FunctionCall | None = None  # None encodes no_action

    @property
    def is_no_action(self) -> bool:
        return self.command is None

    def command_text(self) -> str:
        return NO_ACTION if self.command is None else self.command.render()

    def render(self) -> str:
        """Canonical serialized form, identical to what SFT completions store."""
        return json.dumps({"reason": self.reason, "command": self.command_text()})


_FENCE_RE = re.compile(r"^```[A-Za-z0-9_-]*\n(.*)\n```$", re.DOTALL)


def strip_code_fences(raw: str) -> str:
    stripped = raw.strip()
    m = _FENCE_RE.match(stripped)
    return m.group(1).strip() if m else stripped


def parse_output(raw: str) -> AgentOutput:
    """Parse a raw model response into an AgentOutput.

    Tolerates a surrounding code fence, nothing else: the payload must be a JSON
    object with exactly the keys ``reason`` and ``command``.
    """
    body = strip_code_fences(raw)
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise MalformedOutputError(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedOutputError("output must be a JSON object")
    keys = set(data)
    if keys != {"reason", "command"}:
        missing = sorted({"reason", "command"} - keys)
        extra = sorted(keys - {"reason", "command"})
        parts = []
        if missing:
            parts.append(f"missing keys {missing}")
        if extra:
            parts.append(f"extra keys {extra}")
        raise MalformedOutputError("; ".join(parts))
    reason, command = data["reason"], data["command"]
    if not isinstance(reason, str):
        raise MalformedOutputError("reason must be a string")
    if not isinstance(command, str):
        raise MalformedOutputError("command must be a string")
    if command.strip() == NO_ACTION:
        return AgentOutput(reason=reason, command=None)
    return AgentOutput(reason=reason, command=parse_function_call(command))


def parse_command_field(text: str) -> FunctionCall | None:
    """Parse a stored command string, with ``no_action`` mapping to None."""
    if text.strip() == NO_ACTION:
        return None
    return parse_function_call(text)
