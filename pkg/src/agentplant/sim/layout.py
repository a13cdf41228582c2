"""Plant layout configuration: tracks, sensors, holders, devices, inventory, functions.

Distances are measured in travel-seconds: one unit is the distance an entity
covers per tick at the single fixed conveyor speed, which is what lets sensor
timings in recorded traces be read off directly as position offsets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError

VALID_PARAM_TYPES = ("string", "integer", "enum")
ENTITY_KINDS = ("carrier", "workpiece", "carrier_with_workpiece")


@dataclass(frozen=True)
class SensorLayout:
    id: str
    position: int
    # Seconds of entity movement between the "detects" edge and the "passes" edge;
    # physically the time the entity body takes to clear the sensor.
    dwell: int = 1
    kind: str = "proximity"  # proximity | rfid


@dataclass(frozen=True)
class HolderLayout:
    id: str
    position: int
    initially_engaged: bool = True


@dataclass(frozen=True)
class TrackLayout:
    id: str
    length: int
    sensors: tuple[SensorLayout, ...] = ()
    holders: tuple[HolderLayout, ...] = ()


@dataclass(frozen=True)
class TransferLayout:
    """Directed hand-off: entities reaching ``from_track``'s end re-appear at
    position 0 of ``to_track`` after ``delay`` seconds in transit."""

    from_track: str
    to_module: str
    to_track: str
    delay: int = 2


@dataclass(frozen=True)
class RobotLayout:
    id: str = "robot_arm"
    pick_duration: int = 5
    # Picked workpieces are deposited onto whatever is held at this holder.
    deposit_holder: str = "H2"


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str  # string | integer | enum
    values: tuple[str, ...] = ()  # enum only
    minimum: int | None = None  # integer only

    def signature_name(self) -> str:
        return self.name


@dataclass(frozen=True)
class FunctionDescriptor:
    """One callable plant function: signature, prompt documentation, effect binding,
    and the acknowledgment line emitted right after the call line."""

    name: str
    params: tuple[ParamSpec, ...]
    doc: str
    effect: dict
    ack_text: str
    ack_source: str = "System"  # System | Operator
    ack_level: str = "control"
    ack_missing_text: str | None = None  # queries with no result use this instead

    def signature(self) -> str:
        return f"{self.name}({', '.join(p.name for p in self.params)})"


@dataclass(frozen=True)
class ModuleLayout:
    name: str
    tracks: tuple[TrackLayout, ...] = ()
    robot: RobotLayout | None = None
    rfid_readers: tuple[tuple[str, str, int], ...] = ()  # (id, track, position)
    inventory: dict[str, str] = field(default_factory=dict)  # shelf id -> workpiece name
    functions: tuple[FunctionDescriptor, ...] = ()
    transfers: tuple[TransferLayout, ...] = ()

    def track(self, track_id: str) -> TrackLayout:
        for t in self.tracks:
            if t.id == track_id:
                return t
        raise KeyError(track_id)

    def function(self, name: str) -> FunctionDescriptor | None:
        for f in self.functions:
            if f.name == name:
                return f
        return None


@dataclass(frozen=True)
class LayoutConfig:
    modules: tuple[ModuleLayout, ...] = ()

    def module(self, name: str) -> ModuleLayout:
        for m in self.modules:
            if m.name == name:
                return m
        raise KeyError(name)

    def module_names(self) -> list[str]:
        return [m.name for m in self.modules]


def _require(data: dict, key: str, path: str):
    if key not in data:
        raise ConfigError(path, f"missing required field '{key}'")
    return data[key]


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(path, f"expected integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {value}")
    return value


def _as_str(value, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise ConfigError(path, "expected non-empty string")
    return value


def _parse_sensor(data: dict, path: str) -> SensorLayout:
    return SensorLayout(
        id=_as_str(_require(data, "id", path), f"{path}.id"),
        position=_as_int(_require(data, "position", path), f"{path}.position", minimum=0),
        dwell=_as_int(data.get("dwell", 1), f"{path}.dwell", minimum=1),
        kind=data.get("kind", "proximity"),
    )


def _parse_holder(data: dict, path: str) -> HolderLayout:
    return HolderLayout(
        id=_as_str(_require(data, "id", path), f"{path}.id"),
        position=_as_int(_require(data, "position", path), f"{path}.position", minimum=0),
        initially_engaged=bool(data.get("initially_engaged", True)),
    )


def _parse_track(data: dict, path: str) -> TrackLayout:
    length = _as_int(_require(data, "length", path), f"{path}.length", minimum=1)
    sensors = tuple(
        _parse_sensor(s, f"{path}.sensors[{i}]") for i, s in enumerate(data.get("sensors", []))
    )
    holders = tuple(
        _parse_holder(h, f"{path}.holders[{i}]") for i, h in enumerate(data.get("holders", []))
    )
    track = TrackLayout(
        id=_as_str(_require(data, "id", path), f"{path}.id"),
        length=length,
        sensors=sensors,
        holders=holders,
    )
    for i, s in enumerate(sensors):
        if s.position > length:
            raise ConfigError(f"{path}.sensors[{i}].position", f"beyond track length {length}")
    for i, h in enumerate(holders):
        if h.position > length:
            raise ConfigError(f"{path}.holders[{i}].position", f"beyond track length {length}")
    for name, items in (("sensors", sensors), ("holders", holders)):
        positions = [x.position for x in items]
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise ConfigError(f"{path}.{name}", "positions must be strictly increasing")
    return track


def _parse_param(data: dict, path: str) -> ParamSpec:
    ptype = _as_str(_require(data, "type", path), f"{path}.type")
    if ptype not in VALID_PARAM_TYPES:
        raise ConfigError(f"{path}.type", f"must be one of {VALID_PARAM_TYPES}")
    values = tuple(data.get("values", ()))
    if ptype == "enum" and not values:
        raise ConfigError(f"{path}.values", "enum parameter needs a values list")
    return ParamSpec(
        name=_as_str(_require(data, "name", path), f"{path}.name"),
        type=ptype,
        values=values,
        minimum=data.get("minimum"),
    )


def _parse_function(data: dict, path: str) -> FunctionDescriptor:
    ack = _require(data, "ack", path)
    if not isinstance(ack, dict):
        raise ConfigError(f"{path}.ack", "expected object")
    doc = _as_str(_require(data, "doc", path), f"{path}.doc")
    return FunctionDescriptor(
        name=_as_str(_require(data, "name", path), f"{path}.name"),
        params=tuple(
            _parse_param(p, f"{path}.params[{i}]") for i, p in enumerate(data.get("params", []))
        ),
        doc=doc,
        effect=dict(_require(data, "effect", path)),
        ack_text=_as_str(_require(ack, "text", f"{path}.ack"), f"{path}.ack.text"),
        ack_source=ack.get("source", "System"),
        ack_level=ack.get("level", "control"),
        ack_missing_text=ack.get("missing_text"),
    )


def _parse_module(data: dict, path: str) -> ModuleLayout:
    name = _as_str(_require(data, "name", path), f"{path}.name")
    tracks = tuple(
        _parse_track(t, f"{path}.tracks[{i}]") for i, t in enumerate(data.get("tracks", []))
    )
    functions = tuple(
        _parse_function(f, f"{path}.functions[{i}]")
        for i, f in enumerate(data.get("functions", []))
    )
    fn_names = [f.name for f in functions]
    if len(fn_names) != len(set(fn_names)):
        raise ConfigError(f"{path}.functions", "function names must be unique within a module")
    inventory = data.get("inventory", {})
    if not isinstance(inventory, dict):
        raise ConfigError(f"{path}.inventory", "expected shelf-id to workpiece-name object")
    robot = None
    if "robot" in data:
        r = data["robot"]
        robot = RobotLayout(
            id=r.get("id", "robot_arm"),
            pick_duration=_as_int(r.get("pick_duration", 5), f"{path}.robot.pick_duration", 1),
            deposit_holder=r.get("deposit_holder", "H2"),
        )
    rfid = tuple(
        (d["id"], d["track"], _as_int(d["position"], f"{path}.rfid[{i}].position", 0))
        for i, d in enumerate(data.get("rfid_readers", []))
    )
    transfers = tuple(
        TransferLayout(
            from_track=_as_str(t["from_track"], f"{path}.transfers[{i}].from_track"),
            to_module=_as_str(t["to_module"], f"{path}.transfers[{i}].to_module"),
            to_track=_as_str(t["to_track"], f"{path}.transfers[{i}].to_track"),
            delay=_as_int(t.get("delay", 2), f"{path}.transfers[{i}].delay", 0),
        )
        for i, t in enumerate(data.get("transfers", []))
    )
    track_ids = {t.id for t in tracks}
    for i, (rid, rtrack, rpos) in enumerate(rfid):
        if rtrack not in track_ids:
            raise ConfigError(f"{path}.rfid_readers[{i}].track", f"unknown track {rtrack!r}")
    for i, tr in enumerate(transfers):
        if tr.from_track not in track_ids:
            raise ConfigError(f"{path}.transfers[{i}].from_track", f"unknown track {tr.from_track!r}")
    return ModuleLayout(
        name=name,
        tracks=tracks,
        robot=robot,
        rfid_readers=rfid,
        inventory=dict(inventory),
        functions=functions,
        transfers=transfers,
    )


def load_layout(source: str | dict | Path) -> LayoutConfig:
    """Parse and validate a layout document (JSON text, path, or parsed dict)."""
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
        raise ConfigError("$", "layout document must be an object")
    modules = tuple(
        _parse_module(m, f"modules[{i}]") for i, m in enumerate(data.get("modules", []))
    )
    names = [m.name for m in modules]
    if len(names) != len(set(names)):
        raise ConfigError("modules", "module names must be unique")

    seen_sensors: dict[str, str] = {}
    seen_shelves: dict[str, str] = {}
    for mi, module in enumerate(modules):
        for ti, track in enumerate(module.tracks):
            for si, sensor in enumerate(track.sensors):
                if sensor.id in seen_sensors:
                    raise ConfigError(
                        f"modules[{mi}].tracks[{ti}].sensors[{si}].id",
                        f"sensor id {sensor.id!r} already used in {seen_sensors[sensor.id]}",
                    )
                seen_sensors[sensor.id] = module.name
        for shelf in module.inventory:
            if shelf in seen_shelves:
                raise ConfigError(
                    f"modules[{mi}].inventory",
                    f"shelf id {shelf!r} already used in {seen_shelves[shelf]}",
                )
            seen_shelves[shelf] = module.name
        for i, tr in enumerate(module.transfers):
            if tr.to_module not in names:
                raise ConfigError(
                    f"modules[{mi}].transfers[{i}].to_module", f"unknown module {tr.to_module!r}"
                )
            target = modules[names.index(tr.to_module)]
            if all(t.id != tr.to_track for t in target.tracks):
                raise ConfigError(
                    f"modules[{mi}].transfers[{i}].to_track",
                    f"module {tr.to_module!r} has no track {tr.to_track!r}",
                )
    return LayoutConfig(modules=modules)
