"""Access to the bundled plant: layout, rules, agents, oracle backends, scripts.

The bundled configuration models a two-station plant (storage with two
conveyors, shelf inventory and a pick robot; a downstream inspection stub) and
ships command scripts whose replays serve as golden traces for the test suite.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .agents.backends import load_backends
from .agents.config import AgentConfig, load_agent_configs
from .errors import ConfigError
from .observer import RuleSet, load_rules
from .session import ScriptAction, SessionConfig, parse_script
from .sim.layout import LayoutConfig, load_layout

BUNDLED = "<bundled>"


def bundled_text(filename: str) -> str:
    return resources.files("agentplant.data").joinpath(filename).read_text(encoding="utf-8")


def bundled_layout() -> LayoutConfig:
    return load_layout(bundled_text("layout.json"))


def bundled_rules() -> RuleSet:
    return load_rules(bundled_text("observer_rules.json"))


def bundled_agents(layout: LayoutConfig | None = None) -> dict[str, AgentConfig]:
    return load_agent_configs(bundled_text("agents.json"), layout or bundled_layout())


def bundled_backends() -> dict:
    return load_backends(bundled_text("backends.json"))


def bundled_script(name: str) -> tuple[list[ScriptAction], dict]:
    return parse_script(
        bundled_text(f"{name}.script.jsonl").splitlines(), source_name=f"{name}.script"
    )


def bundled_golden(name: str) -> str:
    return bundled_text(f"{name}.golden.log")


def sample_dataset_path() -> Path:
    with resources.as_file(resources.files("agentplant.data") / "sample.dataset.jsonl") as p:
        return Path(p)


def _resolve_script(spec, base_dir: Path) -> tuple[list[ScriptAction], dict]:
    if isinstance(spec, list):
        lines = [json.dumps(entry) for entry in spec]
        return parse_script(lines, source_name="inline script")
    if isinstance(spec, str):
        if spec.startswith("<bundled:") and spec.endswith(">"):
            return bundled_script(spec[len("<bundled:"):-1])
        path = (base_dir / spec).resolve() if not Path(spec).is_absolute() else Path(spec)
        return parse_script(path.read_text(encoding="utf-8").splitlines(), source_name=str(path))
    raise ConfigError("script", f"cannot interpret script reference {spec!r}")


def load_session_config(source: str | dict | Path, base_dir: str | Path | None = None) -> SessionConfig:
    """Build a SessionConfig from its JSON document, resolving bundled/file refs."""
    if isinstance(source, (str, Path)) and Path(source).exists():
        path = Path(source)
        base_dir = path.parent if base_dir is None else Path(base_dir)
        data = json.loads(path.read_text(encoding="utf-8"))
    elif isinstance(source, str):
        data = json.loads(source)
    else:
        data = source
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    if not isinstance(data, dict):
        raise ConfigError("$", "session config must be an object")

    def resolve(ref, loader_bundled, loader_file):
        if ref == BUNDLED or ref is None:
            return loader_bundled()
        path = (base_dir / ref) if not Path(ref).is_absolute() else Path(ref)
        return loader_file(path.read_text(encoding="utf-8"))

    layout = resolve(data.get("layout"), bundled_layout, load_layout)
    rules = resolve(data.get("rules"), bundled_rules, load_rules)
    agents = resolve(
        data.get("agents"),
        lambda: bundled_agents(layout),
        lambda text: load_agent_configs(text, layout),
    )
    backends = resolve(data.get("backends"), bundled_backends, load_backends)

    script_spec = data.get("script", [])
    actions, header = _resolve_script(script_spec, base_dir) if script_spec else ([], {})

    mode = data.get("mode", "lockstep")
    if mode not in ("lockstep", "realtime"):
        raise ConfigError("mode", f"unknown mode {mode!r}")
    run_until = data.get("run_until", header.get("run_until"))
    epoch = data.get("epoch", header.get("epoch", "12:00:00"))
    return SessionConfig(
        name=data.get("name", "session"),
        layout=layout,
        rules=rules,
        agents=agents,
        backends=backends,
        mode=mode,
        approval_required=bool(data.get("approval_required", False)),
        agents_active=bool(data.get("agents_active", True)),
        tick_rate=float(data.get("tick_rate", 1.0)),
        epoch=epoch,
        script=actions,
        run_until=run_until,
        output_dir=data.get("output_dir"),
    )


def bundled_session_config(name: str) -> SessionConfig:
    return load_session_config(json.loads(bundled_text(f"{name}.session.json")))
