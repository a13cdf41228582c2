"""Dataset file formats.

Test datasets are JSONL: a header record with schema version, manifest and the
agent configs, then suite records, then case records. Each case line carries
both the structured fields and the fully rendered prompt, so the file can be
consumed without this package installed. Fine-tuning exports are plain
``{"prompt", "completion"}`` JSONL records; the field boundary is exactly the
loss-masking boundary.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO

from ..agents.commands import NO_ACTION, parse_command_field
from ..agents.config import AgentConfig
from ..agents.prompt import build_prompt
from ..errors import DatasetError
from ..events import Event, parse_epoch
from .model import Category, Dataset, TestCase, TestPoint, TestSuite

SCHEMA = "agentplant.dataset"
SCHEMA_VERSION = 1


def case_prompt_text(dataset: Dataset, case: TestCase) -> str:
    config = dataset.agent_configs[case.point.agent_config_ref]
    return build_prompt(config, case.point.all_events(), parse_epoch(dataset.epoch)).text


def _case_record(dataset: Dataset, suite: TestSuite, case: TestCase) -> dict:
    return {
        "record": "case",
        "id": case.id,
        "suite": suite.name,
        "agent_config_ref": case.point.agent_config_ref,
        "category": case.category.value,
        "prefix_events": [e.to_dict() for e in case.point.prefix_events],
        "new_events": [e.to_dict() for e in case.point.new_events],
        "expected_reason": case.expected_reason,
        "expected_command": (
            NO_ACTION if case.expected_command is None else case.expected_command.render()
        ),
        "issued_at": case.issued_at,
        "prompt": case_prompt_text(dataset, case),
    }


def export_tests(dataset: Dataset, target: str | Path | IO[str]) -> int:
    """Write the dataset; returns the number of case records."""
    header = {
        "record": "header",
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "name": dataset.name,
        "epoch": dataset.epoch,
        "manifest": dataset.manifest(),
        "agent_configs": {ref: cfg.to_dict() for ref, cfg in sorted(dataset.agent_configs.items())},
    }
    count = 0

    def write(fh: IO[str]) -> None:
        nonlocal count
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for suite in dataset.suites:
            fh.write(
                json.dumps(
                    {
                        "record": "suite",
                        "name": suite.name,
                        "task_description": suite.task_description,
                        "replay_meta": suite.replay_meta,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
            for case in suite.cases:
                fh.write(json.dumps(_case_record(dataset, suite, case), ensure_ascii=False) + "\n")
                count += 1

    if isinstance(target, (str, Path)):
        path = Path(target)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            write(fh)
    else:
        write(target)
    return count


def import_tests(source: str | Path | IO[str]) -> Dataset:
    """Read a dataset file back; import(export(d)) == d on the structured fields."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        lines = source.readlines()

    header: dict | None = None
    suites: list[tuple[dict, list[TestCase]]] = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"line {lineno}: invalid JSON: {exc}") from exc
        record = data.get("record")
        if record == "header":
            if data.get("schema") != SCHEMA:
                raise DatasetError(f"line {lineno}: not a {SCHEMA} file")
            if data.get("version") != SCHEMA_VERSION:
                raise DatasetError(
                    f"line {lineno}: unsupported schema version {data.get('version')!r}, "
                    f"expected {SCHEMA_VERSION}"
                )
            header = data
        elif record == "suite":
            if header is None:
                raise DatasetError(f"line {lineno}: suite record before header")
            suites.append((data, []))
        elif record == "case":
            if not suites:
                raise DatasetError(f"line {lineno}: case record before any suite")
            try:
                case = TestCase(
                    id=data["id"],
                    point=TestPoint(
                        agent_config_ref=data["agent_config_ref"],
                        prefix_events=tuple(Event.from_dict(e) for e in data["prefix_events"]),
                        new_events=tuple(Event.from_dict(e) for e in data["new_events"]),
                    ),
                    expected_reason=data["expected_reason"],
                    expected_command=parse_command_field(data["expected_command"]),
                    category=Category(data["category"]),
                    issued_at=data.get("issued_at"),
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise DatasetError(f"line {lineno}: malformed case record: {exc}") from exc
            suites[-1][1].append(case)
        else:
            raise DatasetError(f"line {lineno}: unknown record type {record!r}")

    if header is None:
        raise DatasetError("missing header record")
    dataset = Dataset(
        name=header.get("name", "dataset"),
        epoch=header.get("epoch", "12:00:00"),
        suites=tuple(
            TestSuite(
                name=meta["name"],
                task_description=meta.get("task_description", ""),
                cases=tuple(cases),
                replay_meta=meta.get("replay_meta"),
            )
            for meta, cases in suites
        ),
        agent_configs={
            ref: AgentConfig.from_dict(cfg)
            for ref, cfg in header.get("agent_configs", {}).items()
        },
        provenance=tuple(header.get("manifest", {}).get("provenance", [])),
    )
    stored = header.get("manifest", {})
    actual = dataset.manifest()
    for key in ("cases", "routine", "unexpected", "suites"):
        if key in stored and stored[key] != actual[key]:
            raise DatasetError(
                f"manifest mismatch: header says {key}={stored[key]}, file has {actual[key]}"
            )
    return dataset


def export_sft(dataset: Dataset, target: str | Path | IO[str]) -> int:
    """Write fine-tuning records; every case must be curated (non-empty reason)."""
    for case in dataset.all_cases():
        if not case.expected_reason.strip():
            raise DatasetError(f"case {case.id!r} has no curated reason; refusing SFT export")
    count = 0

    def write(fh: IO[str]) -> None:
        nonlocal count
        for suite in dataset.suites:
            for case in suite.cases:
                record = {
                    "prompt": case_prompt_text(dataset, case),
                    "completion": case.expected_output().render(),
                }
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
                count += 1

    if isinstance(target, (str, Path)):
        path = Path(target)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            write(fh)
    else:
        write(target)
    return count
