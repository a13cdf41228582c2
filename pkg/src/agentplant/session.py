"""Session orchestration: the loop wiring simulator -> observer -> log -> agents.

One session owns all mutation. Each tick runs fixed phases: advance the
simulator, apply scheduled script actions and externally submitted commands,
apply agent dispatches queued on the previous tick, then step eligible agents.
Agent inference never consumes simulated time (the clock is halted during the
call); a dispatched command actuates on the following tick, like a controller
that writes its outputs at the next cycle boundary.

In lockstep mode the loop is driven synchronously and is fully deterministic
with scripted backends. In real-time mode a background thread ticks at a
configured rate, backend calls for distinct agents may be in flight
concurrently (at most one per agent), and all dispatches still serialize
through this loop.
"""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .agents.backends import LLMBackend
from .agents.commands import AgentOutput, FunctionCall, parse_function_call
from .agents.config import AgentConfig, AgentRole
from .agents.runtime import AgentRuntime, StepRequest, append_summary
from .errors import AgentPlantError, BackendError, ConfigError, RecordingError, SimError
from .events import EventLogMemory, EventSource, SemanticLevel
from .observer import Observer, RuleSet
from .sim.engine import PlantSim
from .sim.layout import LayoutConfig

logger = logging.getLogger(__name__)

VALID_OPS = ("inject", "invoke", "user_task", "assign_task")


class ProposalError(AgentPlantError):
    def __init__(self, message: str, conflict: bool = False, unknown: bool = False):
        super().__init__(message)
        self.conflict = conflict
        self.unknown = unknown


@dataclass(frozen=True)
class ScriptAction:
    t: int
    op: str
    payload: dict


@dataclass
class Proposal:
    """An agent output awaiting human approval. Only pending proposals transition;
    an approved proposal dispatches exactly once."""

    id: str
    agent_id: str
    output: AgentOutput
    created_sim_time: int
    status: str = "pending"  # pending | approved | rejected | expired


@dataclass(frozen=True)
class RecordedCommand:
    module: str
    call: FunctionCall
    note: str
    sim_time: int
    seq_before: int  # last log seq before this command's own events


@dataclass
class SessionConfig:
    name: str = "session"
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    rules: RuleSet = field(default_factory=RuleSet)
    agents: dict[str, AgentConfig] = field(default_factory=dict)
    backends: dict[str, LLMBackend] = field(default_factory=dict)
    mode: str = "lockstep"  # lockstep | realtime
    approval_required: bool = False
    agents_active: bool = True
    tick_rate: float = 1.0  # realtime ticks per wall second
    epoch: str = "12:00:00"
    script: list[ScriptAction] = field(default_factory=list)
    run_until: int | None = None
    output_dir: str | None = None


def parse_script(lines: list[str], source_name: str = "script") -> tuple[list[ScriptAction], dict]:
    """Parse a JSONL action schedule; returns (actions, header)."""
    actions: list[ScriptAction] = []
    header: dict = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source_name}:{lineno}", f"invalid JSON: {exc}") from exc
        if data.get("record") == "script":
            header = data
            continue
        op = data.get("op")
        if op not in VALID_OPS:
            raise ConfigError(f"{source_name}:{lineno}", f"unknown op {op!r}")
        t = data.get("t")
        if not isinstance(t, int) or t < 1:
            raise ConfigError(f"{source_name}:{lineno}", "action needs integer t >= 1")
        payload = {k: v for k, v in data.items() if k not in ("t", "op")}
        actions.append(ScriptAction(t=t, op=op, payload=payload))
    return actions, header


class Session:
    """A running plant: simulator, observer, log, agents, proposals, recording."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.log = EventLogMemory(epoch=config.epoch)
        self.sim = PlantSim(config.layout)
        self.observer = Observer(config.rules, self.log)
        self.runtimes: dict[str, AgentRuntime] = {}
        if config.agents_active:
            for agent_id, agent_cfg in config.agents.items():
                backend = config.backends.get(agent_cfg.backend_ref)
                if backend is None:
                    raise ConfigError(
                        f"agents.{agent_id}.backend",
                        f"unknown backend {agent_cfg.backend_ref!r}",
                    )
                self.runtimes[agent_id] = AgentRuntime(agent_cfg, backend, self.log)
        self._script_by_t: dict[int, list[ScriptAction]] = {}
        for action in config.script:
            self._script_by_t.setdefault(action.t, []).append(action)
        self._pending_dispatches: list[tuple[str, AgentOutput]] = []
        self.proposals: dict[str, Proposal] = {}
        self.proposal_journal: list[dict] = []
        self._proposal_counter = 0
        self.recording_active = False
        self.recorded_commands: list[RecordedCommand] = []
        self.has_human_channel = False
        self._lock = threading.RLock()
        self._thread: threading.Thread | None = None
        self._stop_flag = threading.Event()
        self._executor: ThreadPoolExecutor | None = None
        self._in_flight: dict[str, tuple[Future, StepRequest]] = {}

    # ----------------------------------------------------------------- helpers

    @property
    def sim_time(self) -> int:
        return self.sim.sim_time

    def _manager_config(self) -> AgentConfig | None:
        for cfg in self.config.agents.values():
            if cfg.role is AgentRole.MANAGER:
                return cfg
        return None

    @staticmethod
    def _sentence(text: str) -> str:
        return text if text.endswith(".") else text + "."

    def _emit(self, scope: str, source: EventSource, level: SemanticLevel, text: str) -> int:
        return self.log.append(scope, source, level, text, self.sim.sim_time)

    # ------------------------------------------------------------------- loop

    def advance(self, ticks: int = 1) -> None:
        with self._lock:
            for _ in range(ticks):
                self._step_tick()

    def run_to(self, sim_time: int) -> None:
        with self._lock:
            while self.sim.sim_time < sim_time:
                self._step_tick()

    def run_to_end(self) -> None:
        if self.config.run_until is None:
            raise ConfigError("run_until", "session has no configured end time")
        self.run_to(self.config.run_until)

    def _step_tick(self) -> None:
        changes = self.sim.tick()
        self.observer.on_changes(changes, self.sim.sim_time)

        for action in self._script_by_t.get(self.sim.sim_time, ()):
            self._apply_action(action)

        dispatches, self._pending_dispatches = self._pending_dispatches, []
        for agent_id, output in dispatches:
            self._dispatch_output(agent_id, output)

        if self._executor is not None:
            self._collect_finished_steps()
            self._submit_eligible_steps()
        else:
            self._step_agents_lockstep()

    def _apply_action(self, action: ScriptAction) -> None:
        if action.op == "inject":
            changes = self.sim.inject(action.payload["disturbance"])
            self.observer.on_changes(changes, self.sim.sim_time)
        elif action.op == "invoke":
            call = parse_function_call(action.payload["command"])
            try:
                self.manual_invoke(
                    action.payload["module"], call, note=action.payload.get("note", "")
                )
            except SimError as exc:
                self._emit_rejection(action.payload["module"], exc)
        elif action.op == "user_task":
            self.post_task(action.payload["text"])
        elif action.op == "assign_task":
            self._do_assign_task(action.payload["module"], action.payload["text"])

    # --------------------------------------------------------------- dispatch

    def manual_invoke(self, module: str, call: FunctionCall, note: str = "") -> list[int]:
        """A human-issued command: applied immediately, captured when recording.

        Raises SimError on invalid calls; only successful commands are recorded.
        """
        with self._lock:
            seq_before = self.log.last_seq
            changes = self.sim.invoke(module, call)
            seqs = self.observer.on_changes(changes, self.sim.sim_time)
            if self.recording_active:
                self.recorded_commands.append(
                    RecordedCommand(
                        module=module,
                        call=call,
                        note=note,
                        sim_time=self.sim.sim_time,
                        seq_before=seq_before,
                    )
                )
            return seqs

    def _emit_rejection(self, module: str, exc: SimError) -> int:
        # Errors become events so agents (and humans) can react to them.
        scope = module if module in self.config.layout.module_names() else "Plant"
        return self._emit(
            scope,
            EventSource.SYSTEM,
            SemanticLevel.CONTROL,
            self._sentence(f"Function call rejected: {exc}"),
        )

    def post_task(self, text: str) -> int:
        """A natural-language user task; the manager agent reacts to the event."""
        with self._lock:
            manager = self._manager_config()
            scope = manager.scope_label if manager else "Task Planner"
            return self._emit(
                scope,
                EventSource.USER,
                SemanticLevel.PLANNING,
                self._sentence(f"user task: {text}"),
            )

    def _do_assign_task(self, module: str, text: str) -> None:
        manager = self._manager_config()
        scope = manager.scope_label if manager else "Task Planner"
        self._emit(
            scope, EventSource.MANAGER, SemanticLevel.PLANNING,
            self._sentence(f"task assigned: {text}"),
        )
        # Delivery acknowledgment is emitted by the framework, in the target scope.
        self._emit(
            module, EventSource.SYSTEM, SemanticLevel.PLANNING,
            self._sentence(f"task received: {text}"),
        )

    def _dispatch_output(self, agent_id: str, output: AgentOutput) -> None:
        if output.is_no_action:
            return
        config = self.config.agents[agent_id]
        call = output.command
        if config.role is AgentRole.MANAGER:
            if call.name == "assign_task" and len(call.args) == 2:
                module, text = str(call.args[0]), str(call.args[1])
                if module not in self.config.layout.module_names():
                    self._emit(
                        config.scope_label, EventSource.SYSTEM, SemanticLevel.CONTROL,
                        self._sentence(f"Function call rejected: unknown module '{module}'"),
                    )
                    return
                self._do_assign_task(module, text)
            elif call.name == "mark_task_done" and len(call.args) == 1:
                self._emit(
                    config.scope_label, EventSource.MANAGER, SemanticLevel.PLANNING,
                    self._sentence(f"task completed: {call.args[0]}"),
                )
            else:
                self._emit(
                    config.scope_label, EventSource.SYSTEM, SemanticLevel.CONTROL,
                    self._sentence(f"Function call rejected: unknown manager function {call.render()}"),
                )
        elif config.role is AgentRole.OPERATOR:
            seq_before = self.log.last_seq
            try:
                changes = self.sim.invoke(config.module_binding, call)
            except SimError as exc:
                self._emit_rejection(config.module_binding, exc)
                return
            self.observer.on_changes(changes, self.sim.sim_time)
            if self.recording_active and self.config.approval_required:
                # Approved commands carry human provenance; the agent's reason
                # doubles as the curation note.
                self.recorded_commands.append(
                    RecordedCommand(
                        module=config.module_binding,
                        call=call,
                        note=output.reason,
                        sim_time=self.sim.sim_time,
                        seq_before=seq_before,
                    )
                )
        else:
            self._emit(
                config.scope_label, EventSource.SYSTEM, SemanticLevel.CONTROL,
                "Function call rejected: summarizers cannot dispatch commands.",
            )

    # ------------------------------------------------------------ agent steps

    def _steppable_runtimes(self) -> list[AgentRuntime]:
        return [
            rt for rt in self.runtimes.values() if rt.config.role is not AgentRole.SUMMARIZER
        ]

    def _step_agents_lockstep(self) -> None:
        for rt in self._steppable_runtimes():
            request = rt.prepare()
            if request is None:
                continue
            try:
                raw: str | Exception = rt.complete(request)
            except BackendError as exc:
                raw = exc
            output = rt.conclude(request, raw, self._rejection_emitter(rt.config))
            self._queue_output(rt.config, output)

    def _queue_output(self, config: AgentConfig, output: AgentOutput | None) -> None:
        if output is None or output.is_no_action:
            return
        if self.config.approval_required:
            self._create_proposal(config.id, output)
        else:
            self._pending_dispatches.append((config.id, output))

    def _rejection_emitter(self, config: AgentConfig):
        def emit(text: str) -> None:
            self._emit(config.scope_label, EventSource.SYSTEM, SemanticLevel.CONTROL, text)

        return emit

    def _collect_finished_steps(self) -> None:
        for agent_id, (future, request) in list(self._in_flight.items()):
            if not future.done():
                continue
            del self._in_flight[agent_id]
            rt = self.runtimes[agent_id]
            exc = future.exception()
            raw: str | Exception = exc if exc is not None else future.result()
            output = rt.conclude(request, raw, self._rejection_emitter(rt.config))
            self._queue_output(rt.config, output)

    def _submit_eligible_steps(self) -> None:
        for rt in self._steppable_runtimes():
            if rt.config.id in self._in_flight:
                continue  # at most one in-flight call per agent
            request = rt.prepare()
            if request is None:
                continue
            future = self._executor.submit(rt.complete, request)
            self._in_flight[rt.config.id] = (future, request)

    # -------------------------------------------------------------- proposals

    def _create_proposal(self, agent_id: str, output: AgentOutput) -> Proposal:
        for other in self.proposals.values():
            if other.agent_id == agent_id and other.status == "pending":
                # A newer proposal reflects newer world state; the stale one
                # must never dispatch.
                other.status = "expired"
                self._journal(other, "pending", "expired")
        self._proposal_counter += 1
        proposal = Proposal(
            id=f"p{self._proposal_counter}",
            agent_id=agent_id,
            output=output,
            created_sim_time=self.sim.sim_time,
        )
        self.proposals[proposal.id] = proposal
        self._journal(proposal, None, "pending")
        return proposal

    def _journal(self, proposal: Proposal, from_status: str | None, to_status: str) -> None:
        self.proposal_journal.append(
            {
                "proposal_id": proposal.id,
                "agent_id": proposal.agent_id,
                "sim_time": self.sim.sim_time,
                "from": from_status,
                "to": to_status,
                "command": proposal.output.command_text(),
            }
        )

    def approve_proposal(self, proposal_id: str) -> Proposal:
        with self._lock:
            proposal = self.proposals.get(proposal_id)
            if proposal is None:
                raise ProposalError(f"unknown proposal {proposal_id!r}", unknown=True)
            if proposal.status != "pending":
                raise ProposalError(
                    f"proposal {proposal_id} already {proposal.status}", conflict=True
                )
            proposal.status = "approved"
            self._journal(proposal, "pending", "approved")
            self._pending_dispatches.append((proposal.agent_id, proposal.output))
            return proposal

    def reject_proposal(self, proposal_id: str) -> Proposal:
        with self._lock:
            proposal = self.proposals.get(proposal_id)
            if proposal is None:
                raise ProposalError(f"unknown proposal {proposal_id!r}", unknown=True)
            if proposal.status != "pending":
                raise ProposalError(
                    f"proposal {proposal_id} already {proposal.status}", conflict=True
                )
            proposal.status = "rejected"
            self._journal(proposal, "pending", "rejected")
            return proposal

    # -------------------------------------------------------------- recording

    def start_recording(self) -> None:
        with self._lock:
            if self.runtimes and not self.config.approval_required:
                raise RecordingError(
                    "recording needs human provenance: disable agents or enable approval mode"
                )
            self.recording_active = True
            self.recorded_commands = []

    def stop_recording(self, task_description: str):
        from .dataset.record import build_suite_from_recording

        with self._lock:
            if not self.recording_active:
                raise RecordingError("recording is not active")
            self.recording_active = False
            return build_suite_from_recording(self, task_description)

    # -------------------------------------------------------------- summaries

    def summarize_now(self) -> str:
        with self._lock:
            summarizer = next(
                (
                    rt
                    for rt in self.runtimes.values()
                    if rt.config.role is AgentRole.SUMMARIZER
                ),
                None,
            )
            if summarizer is None:
                raise ConfigError("agents", "session has no summarizer agent")
            text, _prompt = summarizer.summarize()
            append_summary(self.log, summarizer.config, text, self.sim.sim_time)
            return text

    # --------------------------------------------------------------- realtime

    def start_realtime(self) -> None:
        if self.config.approval_required and not self.has_human_channel:
            raise ConfigError(
                "approval_required", "approval mode needs a human channel (run the service)"
            )
        if self._thread is not None:
            return
        self._executor = ThreadPoolExecutor(max_workers=max(len(self.runtimes), 1))
        self._stop_flag.clear()
        self._thread = threading.Thread(target=self._realtime_loop, daemon=True)
        self._thread.start()

    def _realtime_loop(self) -> None:
        interval = 1.0 / self.config.tick_rate
        while not self._stop_flag.wait(interval):
            try:
                self.advance(1)
            except Exception:  # pragma: no cover - defensive, loop must survive
                logger.exception("tick failed")
            if self.config.run_until is not None and self.sim.sim_time >= self.config.run_until:
                break

    def stop_realtime(self) -> None:
        self._stop_flag.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
        if self._executor is not None:
            self._executor.shutdown(wait=False)
            self._executor = None

    # ------------------------------------------------------------------ state

    def snapshot_state(self) -> dict:
        with self._lock:
            snapshot = self.sim.snapshot()
            snapshot["epoch"] = self.config.epoch
            snapshot["modules"] = [
                {
                    "name": m.name,
                    "tracks": [
                        {
                            "id": t.id,
                            "length": t.length,
                            "sensors": [
                                {"id": s.id, "position": s.position, "dwell": s.dwell}
                                for s in t.sensors
                            ],
                            "holders": [
                                {"id": h.id, "position": h.position} for h in t.holders
                            ],
                        }
                        for t in m.tracks
                    ],
                    "functions": [
                        {
                            "name": f.name,
                            "params": [
                                {
                                    "name": p.name,
                                    "type": p.type,
                                    "values": list(p.values),
                                    "minimum": p.minimum,
                                }
                                for p in f.params
                            ],
                            "doc": f.doc,
                        }
                        for f in m.functions
                    ],
                }
                for m in self.config.layout.modules
            ]
            return snapshot

    def write_logs(self, directory: str | Path) -> tuple[Path, Path]:
        with self._lock:
            return self.log.write_files(directory)


def replay_script(
    layout: LayoutConfig,
    rules: RuleSet,
    actions: list[ScriptAction],
    epoch: str = "12:00:00",
    run_until: int | None = None,
) -> Session:
    """Run a pure command/disturbance schedule (no agents) to completion."""
    if run_until is None:
        if not actions:
            raise ConfigError("script", "empty script needs an explicit run_until")
        run_until = max(a.t for a in actions)
    config = SessionConfig(
        name="replay",
        layout=layout,
        rules=rules,
        agents={},
        backends={},
        mode="lockstep",
        agents_active=False,
        epoch=epoch,
        script=actions,
        run_until=run_until,
    )
    session = Session(config)
    session.run_to_end()
    return session
