from __future__ import annotations

import json
import random

import pytest

from agentplant.agents.commands import FunctionCall, parse_function_call
from agentplant.errors import (
    ArityMismatchError,
    BadArgumentError,
    DeviceBusyError,
    DisturbanceError,
    InvalidStateError,
    UnknownFunctionError,
)
from agentplant.sim.engine import PlantSim


@pytest.fixture()
def sim(layout):
    return PlantSim(layout)


def kinds(changes):
    return [c.kind for c in changes]


def place_carrier(sim, track="C1", position=0):
    return sim.inject(
        {"kind": "place_entity", "track": track, "position": position, "entity_kind": "carrier"}
    )


def run_conveyor(sim, name="conveyor_1_run", seconds=13):
    return sim.invoke("Storage Station", FunctionCall(name, ("forward", seconds)))


# ------------------------------------------------------------------ hand traces


def test_carrier_transport_hand_trace(sim):
    """Placement at T, detect at T+1, passes after dwell movement, capture at the holder."""
    place_carrier(sim)  # placed at t=0
    detect = sim.tick()  # t=1
    assert [(c.kind, c.get("sensor")) for c in detect] == [("sensor_detect", "BG56")]

    run_conveyor(sim)  # run starts at t=1
    passes_at, capture_at = None, None
    for _ in range(12):
        for change in sim.tick():
            if change.kind == "sensor_passes" and change.get("sensor") == "BG56":
                passes_at = sim.sim_time
            if change.kind == "sensor_detect" and change.get("sensor") == "BG51":
                capture_at = sim.sim_time
    # dwell 2 -> passes two movement seconds after the run began
    assert passes_at == 3
    # holder H2 at 7 travel-seconds -> detect 7 s after run start
    assert capture_at == 8
    entity = next(iter(sim.entities.values()))
    assert entity.held_by == "H2"
    held_pos = entity.position
    sim.tick()
    assert entity.position == held_pos  # held entities never move


def test_sensor_dwell_two_means_passes_two_seconds_later(sim):
    place_carrier(sim)
    sim.tick()
    run_conveyor(sim)
    t_detect = sim.sim_time
    passes = []
    for _ in range(4):
        passes += [c for c in sim.tick() if c.kind == "sensor_passes"]
    assert passes and sim.sim_time - t_detect <= 4
    assert passes[0].get("sensor") == "BG56"


def test_tick_on_idle_plant_is_silent(sim):
    assert sim.tick() == []
    assert sim.tick() == []


# ---------------------------------------------------------------------- invoke


def test_conveyor_run_starts_track_and_reports(sim):
    changes = run_conveyor(sim)
    assert kinds(changes) == ["function_invoked", "run_started"]
    invoked = changes[0]
    assert invoked.get("call_text") == "conveyor_1_run('forward', 13)"
    assert invoked.get("ack_text") == "Conveyor C1 starts running for 13 seconds."
    state = sim.tracks[("Storage Station", "C1")]
    assert state.running and state.remaining_run == 13


def test_inventory_query_answers_with_shelf(sim):
    changes = sim.invoke(
        "Storage Station",
        FunctionCall("query_inventory_workpiece_position", ("white plastic cylinder",)),
    )
    assert changes[0].get("ack_text") == "The 'white plastic cylinder' is located on shelf 'A_13'."
    answer = changes[1]
    assert answer.kind == "inventory_answer" and answer.get("shelf") == "A_13"


def test_inventory_query_missing_workpiece(sim):
    changes = sim.invoke(
        "Storage Station", FunctionCall("query_inventory_workpiece_position", ("unobtainium",))
    )
    assert changes[0].get("ack_text") == "The 'unobtainium' is not found in the storage inventory."


def test_unknown_function_rejected(sim):
    with pytest.raises(UnknownFunctionError):
        sim.invoke("Storage Station", FunctionCall("foo", ()))


def test_unknown_module_rejected(sim):
    with pytest.raises(UnknownFunctionError):
        sim.invoke("Paint Shop", FunctionCall("conveyor_1_run", ("forward", 1)))


def test_arity_mismatch_rejected(sim):
    with pytest.raises(ArityMismatchError):
        sim.invoke("Storage Station", FunctionCall("conveyor_1_run", ("forward",)))


def test_bad_direction_rejected(sim):
    with pytest.raises(BadArgumentError):
        sim.invoke("Storage Station", FunctionCall("conveyor_1_run", ("sideways", 5)))


def test_nonpositive_time_rejected(sim):
    with pytest.raises(BadArgumentError):
        sim.invoke("Storage Station", FunctionCall("conveyor_1_run", ("forward", 0)))


def test_robot_pick_deposits_on_held_carrier(sim):
    place_carrier(sim)
    sim.tick()
    run_conveyor(sim)
    for _ in range(7):
        sim.tick()
    entity = next(iter(sim.entities.values()))
    assert entity.held_by == "H2"

    changes = sim.invoke("Storage Station", FunctionCall("robot_arm_pick", ("A_13",)))
    assert kinds(changes) == ["function_invoked", "robot_pick_started"]
    assert "A_13" not in sim.inventories["Storage Station"]

    with pytest.raises(DeviceBusyError):
        sim.invoke("Storage Station", FunctionCall("robot_arm_pick", ("A_07",)))

    done = []
    for _ in range(5):
        done += [c for c in sim.tick() if c.kind == "robot_pick_done"]
    assert len(done) == 1
    assert done[0].get("payload") == "white plastic cylinder"
    assert entity.kind == "carrier_with_workpiece"
    assert entity.payload == "white plastic cylinder"


def test_robot_pick_unknown_shelf(sim):
    with pytest.raises(BadArgumentError):
        sim.invoke("Storage Station", FunctionCall("robot_arm_pick", ("Z_99",)))


def test_export_verify_needs_a_held_workpiece(sim):
    with pytest.raises(InvalidStateError):
        sim.invoke("Storage Station", FunctionCall("export_verify", ()))


def test_export_verify_flags_the_held_entity(sim):
    sim.inject(
        {
            "kind": "place_entity",
            "track": "C2",
            "position": 6,
            "entity_kind": "workpiece",
            "payload": "white plastic cylinder",
        }
    )
    sim.tick()  # detect + capture at H1
    entity = next(iter(sim.entities.values()))
    assert entity.held_by == "H1"
    sim.invoke("Storage Station", FunctionCall("export_verify", ()))
    assert "export_verified" in entity.flags


def test_holder_release_frees_the_entity(sim):
    sim.inject(
        {
            "kind": "place_entity",
            "track": "C2",
            "position": 6,
            "entity_kind": "workpiece",
            "payload": "white plastic cylinder",
        }
    )
    sim.tick()
    entity = next(iter(sim.entities.values()))
    sim.invoke("Storage Station", FunctionCall("H1_release", ()))
    assert entity.held_by is None
    sim.invoke("Storage Station", FunctionCall("conveyor_2_run", ("forward", 3)))
    sim.tick()
    assert entity.position == 7


# ---------------------------------------------------------------------- inject


def test_place_entity_detected_on_next_tick(sim):
    changes = sim.inject(
        {
            "kind": "place_entity",
            "track": "C2",
            "position": 0,
            "entity_kind": "workpiece",
            "payload": "white plastic cylinder",
        }
    )
    assert kinds(changes) == ["entity_placed"]
    detects = [c for c in sim.tick() if c.kind == "sensor_detect"]
    assert [c.get("sensor") for c in detects] == ["BG26"]
    assert detects[0].get("entity_kind") == "workpiece"


def test_remove_entity_unknown_id_errors(sim):
    with pytest.raises(DisturbanceError):
        sim.inject({"kind": "remove_entity", "id": "E99"})


def test_remove_entity_stops_future_events(sim):
    place_carrier(sim)
    entity_id = next(iter(sim.entities))
    sim.inject({"kind": "remove_entity", "id": entity_id})
    assert sim.tick() == []


def test_sensor_fault_suppresses_detection(sim):
    sim.inject({"kind": "sensor_fault", "id": "BG21"})
    sim.inject(
        {
            "kind": "place_entity",
            "track": "C2",
            "position": 5,
            "entity_kind": "workpiece",
            "payload": "white plastic cylinder",
        }
    )
    sim.invoke("Storage Station", FunctionCall("conveyor_2_run", ("forward", 2)))
    # Two-tick trace: the workpiece reaches BG21's position and is captured, but
    # the faulted sensor stays silent.
    first = sim.tick()
    second = sim.tick()
    assert all(c.kind != "sensor_detect" for c in first + second)
    assert any(c.kind == "holder_captured" for c in first + second)


def test_sensor_fault_unknown_sensor(sim):
    with pytest.raises(DisturbanceError):
        sim.inject({"kind": "sensor_fault", "id": "BG99"})


def test_unknown_workpiece_places_at_export_infeed(sim):
    changes = sim.inject(
        {"kind": "unknown_workpiece", "payload": "black metal gear", "track": "C2"}
    )
    assert changes[0].kind == "entity_placed"
    assert changes[0].get("track") == "C2"
    detect = [c for c in sim.tick() if c.kind == "sensor_detect"]
    assert detect[0].get("payload") == "black metal gear"


def test_place_entity_position_validation(sim):
    with pytest.raises(DisturbanceError):
        sim.inject({"kind": "place_entity", "track": "C1", "position": 99, "entity_kind": "carrier"})
    with pytest.raises(DisturbanceError):
        sim.inject({"kind": "place_entity", "track": "C9", "position": 0, "entity_kind": "carrier"})
    with pytest.raises(DisturbanceError):
        sim.inject({"kind": "place_entity", "track": "C1", "position": 0, "entity_kind": "workpiece"})
    with pytest.raises(DisturbanceError):
        sim.inject(
            {
                "kind": "place_entity",
                "track": "C1",
                "position": 0,
                "entity_kind": "carrier",
                "payload": "x",
            }
        )


def test_transfer_hands_off_to_inspection(sim, layout):
    length = layout.module("Storage Station").track("C2").length
    sim.inject(
        {
            "kind": "place_entity",
            "track": "C2",
            "position": length - 1,
            "entity_kind": "workpiece",
            "payload": "blue plastic gear",
        }
    )
    sim.invoke("Storage Station", FunctionCall("H1_release", ()))  # H1 is behind it anyway
    sim.invoke("Storage Station", FunctionCall("conveyor_2_run", ("forward", 3)))
    departed, detects = [], []
    for _ in range(6):
        for change in sim.tick():
            if change.kind in ("entity_departed", "entity_transferred"):
                departed.append(change)
            elif change.kind == "sensor_detect":
                detects.append(change)
    assert [c.kind for c in departed] == ["entity_departed", "entity_transferred"]
    assert departed[1].module == "Inspection Station"
    # After the fixed transit delay the workpiece appears at the inspection infeed.
    assert [c.get("sensor") for c in detects] == ["BG27"]


# -------------------------------------------------------------------- snapshot


def test_snapshot_of_idle_plant_is_a_fixpoint(sim, layout):
    snap = sim.snapshot()
    restored = PlantSim.restore(layout, snap)
    assert restored.snapshot() == snap


def test_snapshot_is_json_serializable_and_keeps_inventory(sim):
    snap = json.loads(json.dumps(sim.snapshot()))
    assert snap["inventories"]["Storage Station"]["A_13"] == "white plastic cylinder"


def test_snapshot_restore_replay_equivalence(sim, layout):
    """Replay oracle: restore mid-run, then both sims must produce identical changes."""
    place_carrier(sim)
    sim.tick()
    run_conveyor(sim)
    sim.tick()
    sim.tick()
    snap = sim.snapshot()
    restored = PlantSim.restore(layout, snap)
    for _ in range(5):
        expected = [(c.kind, c.module, c.data) for c in sim.tick()]
        actual = [(c.kind, c.module, c.data) for c in restored.tick()]
        assert actual == expected
    assert restored.snapshot() == sim.snapshot()


def test_no_teleportation_under_random_commands(layout):
    rng = random.Random(7)
    sim = PlantSim(layout)
    place_carrier(sim)
    sim.inject(
        {
            "kind": "place_entity",
            "track": "C2",
            "position": 3,
            "entity_kind": "workpiece",
            "payload": "red metal cube",
        }
    )
    for _ in range(60):
        if rng.random() < 0.3:
            name = rng.choice(["conveyor_1_run", "conveyor_2_run"])
            direction = rng.choice(["forward", "backward"])
            sim.invoke("Storage Station", FunctionCall(name, (direction, rng.randint(1, 6))))
        if rng.random() < 0.1:
            sim.invoke("Storage Station", FunctionCall(rng.choice(["H1_release", "H2_release"]), ()))
        before = {e.id: e.position for e in sim.entities.values() if e.position is not None}
        sim.tick()
        after = {e.id: e.position for e in sim.entities.values() if e.position is not None}
        for eid, pos in after.items():
            if eid in before:
                assert abs(pos - before[eid]) <= 1


def test_identical_scripts_give_identical_change_streams(layout):
    def run():
        sim = PlantSim(layout)
        out = []
        place_carrier(sim)
        out += sim.tick()
        out += sim.invoke("Storage Station", parse_function_call("conveyor_1_run('forward', 9)"))
        for _ in range(10):
            out += sim.tick()
        return [(c.kind, c.module, tuple(sorted(c.data.items()))) for c in out]

    assert run() == run()
