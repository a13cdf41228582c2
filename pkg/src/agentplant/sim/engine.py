"""Deterministic discrete-event plant simulator.

The stepper is strictly single-threaded: all mutation happens inside
``invoke``/``tick``/``inject`` called from one control loop. Determinism is a
hard contract — identical (layout, initial state, command schedule, disturbance
schedule) must yield identical change sequences, because recorded traces are
compared byte-for-byte after rendering.

Within one tick the phase order is fixed: robot completions, then per-track
movement with sensor edges (passes before detects), holder captures, run
completion, and finally inter-module transfers. Entities move exactly one
travel-second per tick while their track runs and they are not held.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

from ..errors import (
    ArityMismatchError,
    BadArgumentError,
    DeviceBusyError,
    DisturbanceError,
    InvalidStateError,
    UnknownFunctionError,
)
from ..agents.commands import FunctionCall
from .layout import ENTITY_KINDS, FunctionDescriptor, LayoutConfig, ModuleLayout, TrackLayout

KIND_DISPLAY = {
    "carrier": "carrier",
    "workpiece": "workpiece",
    "carrier_with_workpiece": "carrier with workpiece",
}


@dataclass(frozen=True)
class RawChange:
    """One state change as handed to the observer: a kind plus its bindings."""

    kind: str
    module: str
    data: dict

    def get(self, key: str, default=None):
        return self.data.get(key, default)


@dataclass
class Entity:
    id: str
    kind: str
    payload: str | None = None
    module: str | None = None
    track: str | None = None
    position: int | None = None
    held_by: str | None = None
    flags: set[str] = field(default_factory=set)
    # False until the first tick after placement/transfer; that tick raises
    # sensor edges for the new position.
    settled: bool = True
    transit_to: tuple[str, str] | None = None  # (module, track)
    transit_arrival: int | None = None


@dataclass
class TrackState:
    running: bool = False
    direction: str = "forward"
    remaining_run: int = 0


@dataclass
class RobotState:
    busy_until: int | None = None
    shelf: str | None = None
    payload: str | None = None

    @property
    def busy(self) -> bool:
        return self.busy_until is not None


class PlantSim:
    """Simulator for one plant layout. Owns the simulated clock."""

    def __init__(self, layout: LayoutConfig):
        self.layout = layout
        self.sim_time = 0
        self.entities: dict[str, Entity] = {}
        self._entity_counter = 0
        self.tracks: dict[tuple[str, str], TrackState] = {}
        self.holders: dict[tuple[str, str], bool] = {}
        self.robots: dict[str, RobotState] = {}
        self.inventories: dict[str, dict[str, str]] = {}
        self.faulted_sensors: set[str] = set()
        # (sensor_id, entity_id) -> movement seconds left until the passes edge
        self.pending_passes: dict[tuple[str, str], int] = {}
        for module in layout.modules:
            for track in module.tracks:
                self.tracks[(module.name, track.id)] = TrackState()
                for holder in track.holders:
                    self.holders[(module.name, holder.id)] = holder.initially_engaged
            if module.robot is not None:
                self.robots[module.name] = RobotState()
            self.inventories[module.name] = dict(module.inventory)

    # ------------------------------------------------------------------ helpers

    def _module(self, name: str) -> ModuleLayout:
        try:
            return self.layout.module(name)
        except KeyError:
            raise UnknownFunctionError(f"unknown module {name!r}") from None

    def _find_track(self, track_id: str) -> tuple[ModuleLayout, TrackLayout]:
        for module in self.layout.modules:
            for track in module.tracks:
                if track.id == track_id:
                    return module, track
        raise DisturbanceError(f"unknown track {track_id!r}")

    def _entities_on(self, module: str, track: str) -> list[Entity]:
        return sorted(
            (
                e
                for e in self.entities.values()
                if e.module == module and e.track == track and e.transit_to is None
            ),
            key=lambda e: e.id,
        )

    def _holder_layout(self, module: ModuleLayout, holder_id: str):
        for track in module.tracks:
            for holder in track.holders:
                if holder.id == holder_id:
                    return track, holder
        raise InvalidStateError(f"module {module.name!r} has no holder {holder_id!r}")

    # ------------------------------------------------------------------ invoke

    def invoke(self, module_name: str, call: FunctionCall) -> list[RawChange]:
        """Apply one function call; returns the raw changes including ``function_invoked``."""
        module = self._module(module_name)
        descriptor = module.function(call.name)
        if descriptor is None:
            raise UnknownFunctionError(
                f"unknown function {call.name!r} in module {module_name!r}"
            )
        bindings = self._check_args(descriptor, call)
        effect_changes, extra_bindings = self._apply_effect(module, descriptor, bindings)
        bindings.update(extra_bindings)
        ack_template = descriptor.ack_text
        if bindings.get("__missing__") and descriptor.ack_missing_text:
            ack_template = descriptor.ack_missing_text
        ack_text = ack_template.format(**{k: v for k, v in bindings.items() if not k.startswith("__")})
        invoked = RawChange(
            kind="function_invoked",
            module=module_name,
            data={
                "function": call.name,
                "args": list(call.args),
                "call_text": call.render(),
                "ack_text": ack_text,
                "ack_source": descriptor.ack_source,
                "ack_level": descriptor.ack_level,
            },
        )
        return [invoked, *effect_changes]

    def _check_args(self, descriptor: FunctionDescriptor, call: FunctionCall) -> dict:
        if len(call.args) != len(descriptor.params):
            raise ArityMismatchError(
                f"{descriptor.name} expects {len(descriptor.params)} argument(s), "
                f"got {len(call.args)}"
            )
        bindings: dict = {}
        for param, value in zip(descriptor.params, call.args):
            if param.type == "integer":
                if not isinstance(value, int):
                    raise BadArgumentError(f"{descriptor.name}: {param.name} must be an integer")
                if param.minimum is not None and value < param.minimum:
                    raise BadArgumentError(
                        f"{descriptor.name}: {param.name} must be >= {param.minimum}"
                    )
            elif param.type == "enum":
                if value not in param.values:
                    raise BadArgumentError(
                        f"{descriptor.name}: {param.name} must be one of "
                        f"{list(param.values)}, got {value!r}"
                    )
            else:  # string
                if not isinstance(value, str):
                    raise BadArgumentError(f"{descriptor.name}: {param.name} must be a string")
            bindings[param.name] = value
        return bindings

    def _apply_effect(
        self, module: ModuleLayout, descriptor: FunctionDescriptor, bindings: dict
    ) -> tuple[list[RawChange], dict]:
        effect = descriptor.effect
        kind = effect.get("kind")
        if kind == "conveyor_run":
            track_id = effect["track"]
            state = self.tracks[(module.name, track_id)]
            state.running = True
            state.direction = bindings["direction"]
            state.remaining_run = bindings["time"]
            return (
                [
                    RawChange(
                        "run_started",
                        module.name,
                        {
                            "track": track_id,
                            "direction": bindings["direction"],
                            "duration": bindings["time"],
                        },
                    )
                ],
                {},
            )
        if kind == "inventory_query":
            name = bindings[descriptor.params[0].name]
            inventory = self.inventories[module.name]
            shelf = next((s for s in sorted(inventory) if inventory[s] == name), None)
            change = RawChange(
                "inventory_answer", module.name, {"workpiece_name": name, "shelf": shelf}
            )
            if shelf is None:
                return [change], {"shelf": "", "__missing__": True}
            return [change], {"shelf": shelf}
        if kind == "robot_pick":
            if module.robot is None:
                raise InvalidStateError(f"module {module.name!r} has no robot arm")
            robot = self.robots[module.name]
            if robot.busy:
                raise DeviceBusyError("robot arm is busy")
            shelf = bindings[descriptor.params[0].name]
            inventory = self.inventories[module.name]
            if shelf not in inventory:
                raise BadArgumentError(f"unknown shelf {shelf!r}")
            payload = inventory.pop(shelf)
            robot.busy_until = self.sim_time + module.robot.pick_duration
            robot.shelf = shelf
            robot.payload = payload
            return (
                [
                    RawChange(
                        "robot_pick_started",
                        module.name,
                        {"shelf": shelf, "payload": payload},
                    )
                ],
                {},
            )
        if kind == "export_verify":
            holder_id = effect["holder"]
            self._holder_layout(module, holder_id)
            held = next(
                (
                    e
                    for e in self.entities.values()
                    if e.module == module.name and e.held_by == holder_id
                ),
                None,
            )
            if held is None:
                raise InvalidStateError(f"nothing is held at {holder_id}")
            held.flags.add("export_verified")
            return (
                [
                    RawChange(
                        "export_verified",
                        module.name,
                        {"entity_id": held.id, "payload": held.payload},
                    )
                ],
                {},
            )
        if kind == "holder_release":
            holder_id = effect["holder"]
            track, _ = self._holder_layout(module, holder_id)
            self.holders[(module.name, holder_id)] = False
            for entity in self.entities.values():
                if entity.module == module.name and entity.held_by == holder_id:
                    entity.held_by = None
            return (
                [RawChange("holder_released", module.name, {"holder": holder_id, "track": track.id})],
                {},
            )
        raise InvalidStateError(f"function {descriptor.name!r} has unsupported effect {kind!r}")

    # -------------------------------------------------------------------- tick

    def tick(self) -> list[RawChange]:
        """Advance the clock one second and return every resulting state change."""
        self.sim_time += 1
        t = self.sim_time
        changes: list[RawChange] = []

        for module in self.layout.modules:
            robot = self.robots.get(module.name)
            if robot is not None and robot.busy and robot.busy_until == t:
                changes.extend(self._complete_pick(module, robot))

        arrivals_at_end: list[tuple[ModuleLayout, TrackLayout, Entity]] = []
        for module in self.layout.modules:
            for track in module.tracks:
                state = self.tracks[(module.name, track.id)]
                entities = self._entities_on(module.name, track.id)
                moved: dict[str, bool] = {}
                if state.running:
                    delta = 1 if state.direction == "forward" else -1
                    for entity in entities:
                        if entity.held_by is not None:
                            moved[entity.id] = False
                            continue
                        new_pos = min(max(entity.position + delta, 0), track.length)
                        moved[entity.id] = new_pos != entity.position
                        entity.position = new_pos
                else:
                    moved = {e.id: False for e in entities}

                arrived = []
                for entity in entities:
                    if not entity.settled:
                        entity.settled = True
                        arrived.append(entity)
                    elif moved[entity.id]:
                        arrived.append(entity)

                # The passes edge precedes new detects: an entity clears the
                # previous sensor in the same second it reaches the next one.
                for (sensor_id, entity_id), remaining in list(self.pending_passes.items()):
                    entity = self.entities.get(entity_id)
                    if entity is None:
                        del self.pending_passes[(sensor_id, entity_id)]
                        continue
                    if entity.track != track.id or entity.module != module.name:
                        continue
                    if not moved.get(entity_id, False):
                        continue
                    remaining -= 1
                    if remaining > 0:
                        self.pending_passes[(sensor_id, entity_id)] = remaining
                        continue
                    del self.pending_passes[(sensor_id, entity_id)]
                    if sensor_id in self.faulted_sensors:
                        continue
                    changes.append(
                        RawChange(
                            "sensor_passes",
                            module.name,
                            {
                                "sensor": sensor_id,
                                "track": track.id,
                                "entity_id": entity_id,
                                "entity_kind": KIND_DISPLAY[entity.kind],
                                "payload": entity.payload,
                            },
                        )
                    )

                for sensor in track.sensors:
                    for entity in arrived:
                        if entity.position != sensor.position:
                            continue
                        if sensor.id in self.faulted_sensors:
                            continue
                        self.pending_passes[(sensor.id, entity.id)] = sensor.dwell
                        changes.append(
                            RawChange(
                                "sensor_detect",
                                module.name,
                                {
                                    "sensor": sensor.id,
                                    "track": track.id,
                                    "position": sensor.position,
                                    "entity_id": entity.id,
                                    "entity_kind": KIND_DISPLAY[entity.kind],
                                    "payload": entity.payload,
                                },
                            )
                        )

                for holder in track.holders:
                    engaged = self.holders[(module.name, holder.id)]
                    if engaged:
                        for entity in entities:
                            if entity.position == holder.position and entity.held_by is None:
                                entity.held_by = holder.id
                                changes.append(
                                    RawChange(
                                        "holder_captured",
                                        module.name,
                                        {
                                            "holder": holder.id,
                                            "track": track.id,
                                            "entity_id": entity.id,
                                            "entity_kind": KIND_DISPLAY[entity.kind],
                                            "payload": entity.payload,
                                        },
                                    )
                                )
                    else:
                        # Released holders spring back once the spot is clear so
                        # the next entity stops again without an explicit engage.
                        if all(e.position != holder.position for e in entities):
                            self.holders[(module.name, holder.id)] = True
                            changes.append(
                                RawChange(
                                    "holder_engaged",
                                    module.name,
                                    {"holder": holder.id, "track": track.id},
                                )
                            )

                if state.running:
                    state.remaining_run -= 1
                    if state.remaining_run <= 0:
                        state.running = False
                        state.remaining_run = 0
                        changes.append(
                            RawChange(
                                "run_done",
                                module.name,
                                {"track": track.id, "direction": state.direction},
                            )
                        )

                transfer = next(
                    (tr for tr in module.transfers if tr.from_track == track.id), None
                )
                if transfer is not None:
                    for entity in entities:
                        if entity.position == track.length and entity.held_by is None:
                            arrivals_at_end.append((module, track, entity))

        for module, track, entity in arrivals_at_end:
            transfer = next(tr for tr in module.transfers if tr.from_track == track.id)
            entity.transit_to = (transfer.to_module, transfer.to_track)
            entity.transit_arrival = t + transfer.delay
            entity.track = None
            entity.position = None
            changes.append(
                RawChange(
                    "entity_departed",
                    module.name,
                    {
                        "track": track.id,
                        "entity_id": entity.id,
                        "entity_kind": KIND_DISPLAY[entity.kind],
                        "payload": entity.payload,
                        "to_module": transfer.to_module,
                    },
                )
            )

        for entity in sorted(self.entities.values(), key=lambda e: e.id):
            if entity.transit_to is not None and entity.transit_arrival == t:
                to_module, to_track = entity.transit_to
                from_module = entity.module
                entity.module = to_module
                entity.track = to_track
                entity.position = 0
                entity.settled = False
                entity.transit_to = None
                entity.transit_arrival = None
                changes.append(
                    RawChange(
                        "entity_transferred",
                        to_module,
                        {
                            "track": to_track,
                            "entity_id": entity.id,
                            "entity_kind": KIND_DISPLAY[entity.kind],
                            "payload": entity.payload,
                            "from_module": from_module,
                        },
                    )
                )
        return changes

    def _complete_pick(self, module: ModuleLayout, robot: RobotState) -> list[RawChange]:
        shelf, payload = robot.shelf, robot.payload
        robot.busy_until = None
        robot.shelf = None
        robot.payload = None
        target = next(
            (
                e
                for e in self.entities.values()
                if e.module == module.name and e.held_by == module.robot.deposit_holder
            ),
            None,
        )
        if target is not None and target.kind == "carrier":
            target.kind = "carrier_with_workpiece"
            target.payload = payload
            deposited_on = target.id
        else:
            # No carrier waiting: the workpiece is set down at the pick point.
            track, holder = self._holder_layout(module, module.robot.deposit_holder)
            entity = self._new_entity("workpiece", payload, module.name, track.id, holder.position)
            entity.settled = True
            deposited_on = entity.id
        return [
            RawChange(
                "robot_pick_done",
                module.name,
                {"shelf": shelf, "payload": payload, "deposited_on": deposited_on},
            )
        ]

    # ------------------------------------------------------------------ inject

    def inject(self, disturbance: dict) -> list[RawChange]:
        """Apply one scripted disturbance; changes flow to the observer like any other."""
        kind = disturbance.get("kind")
        if kind == "place_entity":
            return self._place_entity(disturbance)
        if kind == "unknown_workpiece":
            payload = disturbance.get("payload")
            if not payload:
                raise DisturbanceError("unknown_workpiece requires a payload name")
            spec = {
                "kind": "place_entity",
                "track": disturbance.get("track") or self._default_track(),
                "position": disturbance.get("position", 0),
                "entity_kind": "workpiece",
                "payload": payload,
            }
            return self._place_entity(spec)
        if kind == "remove_entity":
            entity_id = disturbance.get("id")
            entity = self.entities.pop(entity_id, None)
            if entity is None:
                raise DisturbanceError(f"unknown entity {entity_id!r}")
            for key in [k for k in self.pending_passes if k[1] == entity_id]:
                del self.pending_passes[key]
            return [
                RawChange(
                    "entity_removed",
                    entity.module or "",
                    {
                        "entity_id": entity.id,
                        "entity_kind": KIND_DISPLAY[entity.kind],
                        "payload": entity.payload,
                    },
                )
            ]
        if kind == "sensor_fault":
            sensor_id = disturbance.get("id")
            for module in self.layout.modules:
                for track in module.tracks:
                    for sensor in track.sensors:
                        if sensor.id == sensor_id:
                            self.faulted_sensors.add(sensor_id)
                            return [
                                RawChange("sensor_faulted", module.name, {"sensor": sensor_id})
                            ]
            raise DisturbanceError(f"unknown sensor {sensor_id!r}")
        raise DisturbanceError(f"unknown disturbance kind {kind!r}")

    def _default_track(self) -> str:
        for module in self.layout.modules:
            if module.tracks:
                return module.tracks[0].id
        raise DisturbanceError("layout has no tracks")

    def _place_entity(self, spec: dict) -> list[RawChange]:
        track_id = spec.get("track")
        module, track = self._find_track(track_id)
        position = spec.get("position", 0)
        if not isinstance(position, int) or position < 0 or position > track.length:
            raise DisturbanceError(
                f"position {position!r} outside track {track_id!r} (0..{track.length})"
            )
        entity_kind = spec.get("entity_kind", "workpiece")
        if entity_kind not in ENTITY_KINDS:
            raise DisturbanceError(f"unknown entity kind {entity_kind!r}")
        payload = spec.get("payload")
        if entity_kind == "carrier" and payload is not None:
            raise DisturbanceError("a bare carrier cannot have a payload")
        if entity_kind != "carrier" and not payload:
            raise DisturbanceError(f"entity kind {entity_kind!r} requires a payload name")
        entity = self._new_entity(entity_kind, payload, module.name, track.id, position)
        return [
            RawChange(
                "entity_placed",
                module.name,
                {
                    "track": track.id,
                    "position": position,
                    "entity_id": entity.id,
                    "entity_kind": KIND_DISPLAY[entity.kind],
                    "payload": entity.payload,
                },
            )
        ]

    def _new_entity(
        self, kind: str, payload: str | None, module: str, track: str, position: int
    ) -> Entity:
        self._entity_counter += 1
        entity = Entity(
            id=f"E{self._entity_counter}",
            kind=kind,
            payload=payload,
            module=module,
            track=track,
            position=position,
            settled=False,
        )
        self.entities[entity.id] = entity
        return entity

    # ---------------------------------------------------------------- snapshot

    def snapshot(self) -> dict:
        """Lossless, JSON-serializable copy of the full dynamic state."""
        return {
            "sim_time": self.sim_time,
            "entity_counter": self._entity_counter,
            "entities": [
                {
                    "id": e.id,
                    "kind": e.kind,
                    "payload": e.payload,
                    "module": e.module,
                    "track": e.track,
                    "position": e.position,
                    "held_by": e.held_by,
                    "flags": sorted(e.flags),
                    "settled": e.settled,
                    "transit_to": list(e.transit_to) if e.transit_to else None,
                    "transit_arrival": e.transit_arrival,
                }
                for e in sorted(self.entities.values(), key=lambda e: e.id)
            ],
            "tracks": {
                f"{m}/{t}": {
                    "running": s.running,
                    "direction": s.direction,
                    "remaining_run": s.remaining_run,
                }
                for (m, t), s in sorted(self.tracks.items())
            },
            "holders": {f"{m}/{h}": engaged for (m, h), engaged in sorted(self.holders.items())},
            "robots": {
                m: {"busy_until": r.busy_until, "shelf": r.shelf, "payload": r.payload}
                for m, r in sorted(self.robots.items())
            },
            "inventories": {m: dict(inv) for m, inv in sorted(self.inventories.items())},
            "faulted_sensors": sorted(self.faulted_sensors),
            "pending_passes": [
                {"sensor": s, "entity": e, "remaining": r}
                for (s, e), r in sorted(self.pending_passes.items())
            ],
        }

    @classmethod
    def restore(cls, layout: LayoutConfig, snapshot: dict) -> "PlantSim":
        sim = cls(layout)
        snapshot = copy.deepcopy(snapshot)
        sim.sim_time = snapshot["sim_time"]
        sim._entity_counter = snapshot["entity_counter"]
        sim.entities = {}
        for e in snapshot["entities"]:
            sim.entities[e["id"]] = Entity(
                id=e["id"],
                kind=e["kind"],
                payload=e["payload"],
                module=e["module"],
                track=e["track"],
                position=e["position"],
                held_by=e["held_by"],
                flags=set(e["flags"]),
                settled=e["settled"],
                transit_to=tuple(e["transit_to"]) if e["transit_to"] else None,
                transit_arrival=e["transit_arrival"],
            )
        for key, s in snapshot["tracks"].items():
            m, t = key.split("/", 1)
            sim.tracks[(m, t)] = TrackState(
                running=s["running"], direction=s["direction"], remaining_run=s["remaining_run"]
            )
        for key, engaged in snapshot["holders"].items():
            m, h = key.split("/", 1)
            sim.holders[(m, h)] = engaged
        for m, r in snapshot["robots"].items():
            sim.robots[m] = RobotState(
                busy_until=r["busy_until"], shelf=r["shelf"], payload=r["payload"]
            )
        for m, inv in snapshot["inventories"].items():
            sim.inventories[m] = dict(inv)
        sim.faulted_sensors = set(snapshot["faulted_sensors"])
        sim.pending_passes = {
            (p["sensor"], p["entity"]): p["remaining"] for p in snapshot["pending_passes"]
        }
        return sim
