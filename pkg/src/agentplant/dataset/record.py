"""Reverse recording: turning a manually operated session into a test suite.

Each human command becomes a case whose expected output is that command; the
events that accumulated in the operator's subscribed view since the previous
command form the case's new-event window, so the windows tile the view with no
gaps or overlaps. Replaying a recorded suite re-runs the non-command script and
lets a backend (normally the suite-derived oracle) regenerate each command at
its recorded time — with the oracle this reproduces the original log verbatim.
"""

from __future__ import annotations

import logging
import re
from dataclasses import replace

from ..agents.backends import ScriptedBackend
from ..agents.commands import parse_output
from ..agents.config import AgentRole
from ..agents.prompt import build_prompt
from ..errors import DatasetError, RecordingError
from ..session import ScriptAction, Session, SessionConfig
from .model import Category, Dataset, TestCase, TestPoint, TestSuite

logger = logging.getLogger(__name__)


def slugify(text: str, fallback: str = "recorded-suite") -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")[:40].strip("-")
    return slug or fallback


def build_suite_from_recording(session: Session, task_description: str) -> TestSuite:
    """Reverse-construct a suite from the commands captured by a recording session."""
    recorded = session.recorded_commands
    suite_name = slugify(task_description)
    setup = [
        {"t": a.t, "op": a.op, **a.payload}
        for a in session.config.script
        if a.op != "invoke"  # commands are regenerated by the backend on replay
    ]
    replay_meta = {
        "setup": setup,
        "epoch": session.config.epoch,
        "run_until": session.config.run_until or session.sim_time,
    }
    if not recorded:
        logger.warning("recording captured zero commands; producing an empty suite")
        return TestSuite(
            name=suite_name, task_description=task_description, cases=(), replay_meta=replay_meta
        )

    operators = {
        cfg.module_binding: (ref, cfg)
        for ref, cfg in session.config.agents.items()
        if cfg.role is AgentRole.OPERATOR
    }
    last_consumed: dict[str, int] = {}
    cases: list[TestCase] = []
    for i, rec in enumerate(recorded, start=1):
        if rec.module not in operators:
            raise RecordingError(
                f"no operator agent is configured for module {rec.module!r}; "
                "cannot attribute the recorded command"
            )
        ref, cfg = operators[rec.module]
        view = session.log.view(cfg.subscription, 0)
        consumed = last_consumed.get(ref, 0)
        prefix = tuple(e for e in view if e.seq <= consumed)
        window = tuple(e for e in view if consumed < e.seq <= rec.seq_before)
        if not window:
            raise RecordingError(
                f"command {rec.call.render()} at t={rec.sim_time} has no new events before it"
            )
        cases.append(
            TestCase(
                id=f"{suite_name}/{i}",
                point=TestPoint(agent_config_ref=ref, prefix_events=prefix, new_events=window),
                expected_reason=rec.note,
                expected_command=rec.call,
                category=Category.ROUTINE,
                issued_at=rec.sim_time,
            )
        )
        last_consumed[ref] = rec.seq_before
    return TestSuite(
        name=suite_name,
        task_description=task_description,
        cases=tuple(cases),
        replay_meta=replay_meta,
    )


def dataset_from_suites(
    name: str,
    suites: list[TestSuite],
    config: SessionConfig,
    provenance: tuple[str, ...] = (),
) -> Dataset:
    refs = {case.point.agent_config_ref for suite in suites for case in suite.cases}
    return Dataset(
        name=name,
        suites=tuple(suites),
        agent_configs={ref: config.agents[ref] for ref in sorted(refs)},
        epoch=config.epoch,
        provenance=provenance,
    )


def suite_oracle(dataset: Dataset, name: str = "oracle") -> ScriptedBackend:
    """The perfect oracle: replies with each case's reference output for its window."""
    backend = ScriptedBackend(
        name, default='{"reason": "No action required for these events", "command": "no_action"}'
    )
    for suite in dataset.suites:
        for case in suite.cases:
            response = case.expected_output().render()
            backend.program(case.point.agent_config_ref, case.point.window_texts(), response)
            from .io import case_prompt_text

            backend.program_prompt(case_prompt_text(dataset, case), response)
    return backend


def replay_suite(suite: TestSuite, base_config: SessionConfig, backend) -> Session:
    """Re-run a recorded suite: scripted setup plus backend-regenerated commands."""
    if suite.replay_meta is None:
        raise DatasetError(f"suite {suite.name!r} carries no replay metadata")
    meta = suite.replay_meta
    actions = [
        ScriptAction(t=a["t"], op=a["op"], payload={k: v for k, v in a.items() if k not in ("t", "op")})
        for a in meta["setup"]
    ]
    config = replace(
        base_config,
        name=f"replay-{suite.name}",
        agents_active=False,
        approval_required=False,
        mode="lockstep",
        epoch=meta.get("epoch", base_config.epoch),
        script=actions,
        run_until=meta["run_until"],
    )
    session = Session(config)
    pending = sorted(
        (case for case in suite.cases),
        key=lambda c: (c.issued_at if c.issued_at is not None else 0),
    )
    if any(case.issued_at is None for case in pending):
        raise DatasetError(f"suite {suite.name!r} has cases without recorded issue times")
    cursors: dict[str, int] = {}
    idx = 0
    while session.sim_time < config.run_until:
        session.advance(1)
        while idx < len(pending) and pending[idx].issued_at == session.sim_time:
            case = pending[idx]
            idx += 1
            ref = case.point.agent_config_ref
            cfg = base_config.agents[ref]
            view = session.log.view(cfg.subscription, cursors.get(ref, 0))
            full_view = session.log.view(cfg.subscription, 0)
            prompt = build_prompt(cfg, full_view, session.log.epoch_seconds)
            raw = backend.complete(
                prompt.text, agent_id=ref, new_events=tuple(e.text for e in view)
            )
            output = parse_output(raw)
            if view:
                cursors[ref] = view[-1].seq
            if not output.is_no_action:
                session.manual_invoke(cfg.module_binding, output.command, note=output.reason)
    return session
