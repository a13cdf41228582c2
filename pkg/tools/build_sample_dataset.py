#!/usr/bin/env python3
"""Regenerate the bundled sample dataset (src/agentplant/data/sample.dataset.jsonl).

Three sources: operator cases reverse-derived from the bundled retrieval demo,
a recorded run of the bundled export script, and three hand-authored
unexpected scenarios. Run from the repo root after changing bundled configs.
"""

from __future__ import annotations

import sys
from pathlib import Path

from agentplant.agents.commands import parse_function_call
from agentplant.agents.config import AgentRole
from agentplant.bundled import bundled_session_config
from agentplant.dataset.io import export_tests
from agentplant.dataset.model import Category, TestCase, TestPoint, TestSuite
from agentplant.dataset.record import dataset_from_suites
from agentplant.events import Event, EventSource, SemanticLevel
from agentplant.session import Session

OUT = Path(__file__).resolve().parent.parent / "src/agentplant/data/sample.dataset.jsonl"

# Curated reasons per command, matching the bundled SOP oracle.
REASONS = {
    "conveyor_1_run": "Carrier detected at entrance, initiate transport to pick and place point",
    "query_inventory_workpiece_position": (
        "Carrier at the pick and place point, query the requested workpiece position"
    ),
    "robot_arm_pick": "Workpiece position known, start the robot pick",
}


def retrieval_suite() -> tuple[TestSuite, Session]:
    config = bundled_session_config("demo_retrieval")
    session = Session(config)
    session.run_to_end()
    ref = "storage-operator"
    operator = config.agents[ref]
    assert operator.role is AgentRole.OPERATOR
    view = session.log.view(operator.subscription, 0)
    marker = f"{operator.module_binding} calls function: "
    cases = []
    consumed = 0
    for event in view:
        if event.source is not EventSource.OPERATOR or not event.text.startswith(marker):
            continue
        command = parse_function_call(event.text[len(marker):].rstrip("."))
        prefix = tuple(e for e in view if e.seq <= consumed)
        window = tuple(e for e in view if consumed < e.seq < event.seq)
        cases.append(
            TestCase(
                id=f"storage-retrieval/{len(cases) + 1}",
                point=TestPoint(agent_config_ref=ref, prefix_events=prefix, new_events=window),
                expected_reason=REASONS[command.name],
                expected_command=command,
                category=Category.ROUTINE,
                issued_at=event.sim_time,
            )
        )
        consumed = event.seq - 1
    suite = TestSuite(
        name="storage-retrieval",
        task_description="retrieve a 'white plastic cylinder' from the storage station",
        cases=tuple(cases),
    )
    return suite, session


def export_recorded_suite() -> tuple[TestSuite, Session]:
    config = bundled_session_config("record_export")
    session = Session(config)
    session.start_recording()
    session.run_to_end()
    suite = session.stop_recording("storage export routine")
    return suite, session


def _event(seq, t, scope, source, level, text) -> Event:
    return Event(seq=seq, sim_time=t, scope=scope, source=source, level=level, text=text)


def unexpected_suites() -> list[TestSuite]:
    S, O = EventSource.SYSTEM, EventSource.OPERATOR
    M = EventSource.MANAGER
    F, C, P = SemanticLevel.FIELD, SemanticLevel.CONTROL, SemanticLevel.PLANNING
    st = "Storage Station"
    foreign = TestSuite(
        name="unexpected-foreign-arrival",
        task_description="return an unidentified workpiece to the inspection station",
        cases=(
            TestCase(
                id="unexpected-foreign-arrival/1",
                point=TestPoint(
                    agent_config_ref="storage-operator",
                    prefix_events=(
                        _event(1, 400, "Task Planner", M, P,
                               "task assigned: return any unidentified workpiece at the export infeed to the inspection station."),
                        _event(2, 400, st, S, P,
                               "task received: return any unidentified workpiece at the export infeed to the inspection station."),
                    ),
                    new_events=(
                        _event(3, 420, st, S, F,
                               "BG26 detects a workpiece at the infed of the conveyor C2."),
                    ),
                ),
                expected_reason=(
                    "Unidentified workpiece at the export infeed, send it back towards the inspection station"
                ),
                expected_command=parse_function_call("conveyor_2_run('backward', 5)"),
                category=Category.UNEXPECTED,
                issued_at=421,
            ),
        ),
    )
    robot_busy = TestSuite(
        name="unexpected-robot-busy",
        task_description="handle a rejected pick while the robot arm is busy",
        cases=(
            TestCase(
                id="unexpected-robot-busy/1",
                point=TestPoint(
                    agent_config_ref="storage-operator",
                    prefix_events=(
                        _event(1, 500, st, S, F,
                               "BG51 detects a carrier at the holder H2 on conveyor C1."),
                        _event(2, 501, st, O, C,
                               "Storage Station calls function: robot_arm_pick('A_07')."),
                    ),
                    new_events=(
                        _event(3, 501, st, S, C, "Function call rejected: robot arm is busy."),
                    ),
                ),
                expected_reason=(
                    "The robot arm is busy, wait for it to finish before retrying the pick"
                ),
                expected_command=None,
                category=Category.UNEXPECTED,
                issued_at=502,
            ),
        ),
    )
    stall = TestSuite(
        name="unexpected-transport-stall",
        task_description="recover a carrier that stopped short of the pick and place point",
        cases=(
            TestCase(
                id="unexpected-transport-stall/1",
                point=TestPoint(
                    agent_config_ref="storage-operator",
                    prefix_events=(
                        _event(1, 600, st, S, F,
                               "BG56 detects a carrier at the infeed of conveyor C1."),
                        _event(2, 600, st, O, C,
                               "Storage Station calls function: conveyor_1_run('forward', 13)."),
                        _event(3, 600, st, O, C, "Conveyor C1 starts running for 13 seconds."),
                        _event(4, 602, st, S, F, "A carrier passes BG56."),
                    ),
                    new_events=(
                        _event(5, 605, st, S, F, "Conveyor C1 stops."),
                    ),
                ),
                expected_reason=(
                    "The carrier stopped short of the pick and place point, run the conveyor "
                    "again briefly to bring it to the holder"
                ),
                expected_command=parse_function_call("conveyor_1_run('forward', 4)"),
                category=Category.UNEXPECTED,
                issued_at=606,
            ),
        ),
    )
    return [foreign, robot_busy, stall]


def main() -> int:
    retrieval, demo_session = retrieval_suite()
    export_suite, record_session = export_recorded_suite()
    suites = [retrieval, export_suite, *unexpected_suites()]
    dataset = dataset_from_suites(
        "bundled-sample",
        suites,
        record_session.config,
        provenance=(
            "operator cases derived from the bundled retrieval demo trace",
            "export cases recorded from the bundled export command script",
            "unexpected scenarios hand-authored",
        ),
    )
    count = export_tests(dataset, OUT)
    manifest = dataset.manifest()
    print(f"wrote {count} cases to {OUT}")
    print(f"manifest: {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
