from __future__ import annotations

import json

import pytest

from agentplant.errors import ConfigError
from agentplant.sim.layout import load_layout


def test_bundled_geometry_matches_trace_timing(layout):
    # Derived from the recorded traces: run start to holder sensor is 7 s on C1
    # and 6 s on C2, so those devices sit 7 and 6 travel-seconds from the infeed.
    storage = layout.module("Storage Station")
    c1 = storage.track("C1")
    c2 = storage.track("C2")
    assert [h.position for h in c1.holders if h.id == "H2"] == [7]
    assert [s.position for s in c1.sensors if s.id == "BG51"] == [7]
    assert [h.position for h in c2.holders if h.id == "H1"] == [6]
    assert [s.position for s in c2.sensors if s.id == "BG21"] == [6]
    assert [s.dwell for s in c1.sensors if s.id == "BG56"] == [2]
    assert [s.dwell for s in c2.sensors if s.id == "BG26"] == [2]


def test_bundled_inventory_and_inspection_stub(layout):
    storage = layout.module("Storage Station")
    assert storage.inventory["A_13"] == "white plastic cylinder"
    inspection = layout.module("Inspection Station")
    assert [s.id for t in inspection.tracks for s in t.sensors] == ["BG27"]


def test_empty_modules_list_is_a_valid_inert_plant():
    layout = load_layout('{"modules": []}')
    assert layout.modules == ()


def base_module(**overrides):
    module = {
        "name": "M",
        "tracks": [
            {
                "id": "T",
                "length": 10,
                "sensors": [{"id": "S1", "position": 0, "dwell": 1}],
                "holders": [],
            }
        ],
        "functions": [],
    }
    module.update(overrides)
    return {"modules": [module]}


def test_duplicate_sensor_ids_rejected_with_path():
    doc = {
        "modules": [
            base_module()["modules"][0],
            {
                "name": "N",
                "tracks": [
                    {"id": "U", "length": 5, "sensors": [{"id": "S1", "position": 1}]}
                ],
            },
        ]
    }
    with pytest.raises(ConfigError) as exc:
        load_layout(doc)
    assert "S1" in str(exc.value)
    assert "modules[1]" in exc.value.path


def test_sensor_position_beyond_track_length_rejected():
    doc = base_module()
    doc["modules"][0]["tracks"][0]["sensors"][0]["position"] = 11
    with pytest.raises(ConfigError) as exc:
        load_layout(doc)
    assert "position" in exc.value.path


def test_positions_must_strictly_increase():
    doc = base_module()
    doc["modules"][0]["tracks"][0]["sensors"] = [
        {"id": "A", "position": 3},
        {"id": "B", "position": 3},
    ]
    with pytest.raises(ConfigError, match="strictly increasing"):
        load_layout(doc)


def test_dwell_below_one_rejected():
    doc = base_module()
    doc["modules"][0]["tracks"][0]["sensors"][0]["dwell"] = 0
    with pytest.raises(ConfigError):
        load_layout(doc)


def test_duplicate_function_names_rejected():
    fn = {
        "name": "go",
        "params": [],
        "doc": "d",
        "effect": {"kind": "conveyor_run", "track": "T"},
        "ack": {"text": "ok"},
    }
    doc = base_module(functions=[fn, dict(fn)])
    with pytest.raises(ConfigError, match="unique"):
        load_layout(doc)


def test_enum_param_requires_values():
    doc = base_module(
        functions=[
            {
                "name": "go",
                "params": [{"name": "d", "type": "enum"}],
                "doc": "d",
                "effect": {"kind": "conveyor_run", "track": "T"},
                "ack": {"text": "ok"},
            }
        ]
    )
    with pytest.raises(ConfigError, match="values"):
        load_layout(doc)


def test_duplicate_shelf_ids_across_modules_rejected():
    doc = {
        "modules": [
            dict(base_module()["modules"][0], inventory={"A_1": "x"}),
            {"name": "N", "tracks": [], "inventory": {"A_1": "y"}},
        ]
    }
    with pytest.raises(ConfigError, match="shelf"):
        load_layout(doc)


def test_transfer_target_must_exist():
    doc = base_module(
        transfers=[{"from_track": "T", "to_module": "Ghost", "to_track": "X"}]
    )
    with pytest.raises(ConfigError, match="Ghost"):
        load_layout(doc)


def test_invalid_json_reported_at_root():
    with pytest.raises(ConfigError) as exc:
        load_layout("{not json")
    assert exc.value.path == "$"


def test_layout_accepts_json_text_and_dict(layout):
    text = json.dumps(
        {"modules": [{"name": "Solo", "tracks": [{"id": "T", "length": 3}]}]}
    )
    assert load_layout(text).module("Solo").track("T").length == 3
