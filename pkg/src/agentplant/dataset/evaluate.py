"""Evaluation harness: structural command matching with routine/unexpected strata.

Commands are compared as parsed values (name plus argument list), never as raw
strings, so whitespace or quote style cannot fail a case. Reasons are never
auto-scored; human plausibility annotations (Likert 1-5) are merged from a
separate file and averaged over the annotated cases only.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from ..agents.commands import NO_ACTION, parse_output
from ..errors import BackendError, DatasetError, OutputParseError
from .io import case_prompt_text
from .model import Category, Dataset, TestCase

MATCH = "match"
MISMATCH = "mismatch"
PARSE_FAILURE = "parse_failure"
INFRA_FAILURE = "infrastructure_failure"


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    suite: str
    category: Category
    verdict: str
    expected_command: str
    produced_command: str | None
    produced_reason: str | None
    detail: str = ""

    @property
    def counts_as_match(self) -> bool:
        return self.verdict == MATCH


@dataclass(frozen=True)
class CorrectnessReport:
    results: tuple[CaseResult, ...]
    backend_name: str = ""
    infra_failures_in_denominator: bool = True
    plausibility: dict[str, int] = field(default_factory=dict)

    def _in_denominator(self, r: CaseResult) -> bool:
        if r.verdict == INFRA_FAILURE and not self.infra_failures_in_denominator:
            return False
        return True

    def stratum(self, category: Category | None = None) -> dict:
        rows = [
            r
            for r in self.results
            if self._in_denominator(r) and (category is None or r.category is category)
        ]
        matches = sum(1 for r in rows if r.counts_as_match)
        annotated = [
            self.plausibility[r.case_id]
            for r in rows
            if r.case_id in self.plausibility
        ]
        return {
            "cases": len(rows),
            "matches": matches,
            "rate": (matches / len(rows)) if rows else None,
            "plausibility_avg": (sum(annotated) / len(annotated)) if annotated else None,
            "plausibility_annotated": len(annotated),
        }

    def to_dict(self) -> dict:
        return {
            "backend": self.backend_name,
            "overall": self.stratum(None),
            "routine": self.stratum(Category.ROUTINE),
            "unexpected": self.stratum(Category.UNEXPECTED),
            "cases": [
                {
                    "case_id": r.case_id,
                    "suite": r.suite,
                    "category": r.category.value,
                    "verdict": r.verdict,
                    "expected_command": r.expected_command,
                    "produced_command": r.produced_command,
                    "produced_reason": r.produced_reason,
                    "detail": r.detail,
                    "plausibility": self.plausibility.get(r.case_id),
                }
                for r in self.results
            ],
        }

    def format_table(self) -> str:
        rows = [
            ("all", self.stratum(None)),
            ("routine", self.stratum(Category.ROUTINE)),
            ("unexpected", self.stratum(Category.UNEXPECTED)),
        ]
        lines = [f"{'':12s}{'cases':>7s}{'correct':>9s}{'rate':>9s}  plausibility"]
        for label, s in rows:
            rate = f"{100.0 * s['rate']:.1f}%" if s["rate"] is not None else "n/a"
            if s["plausibility_avg"] is not None:
                plaus = f"{s['plausibility_avg']:.1f} ({s['plausibility_annotated']}/{s['cases']} annotated)"
            else:
                plaus = "n/a"
            lines.append(f"{label:12s}{s['cases']:>7d}{s['matches']:>9d}{rate:>9s}  {plaus}")
        return "\n".join(lines)


def _judge(dataset: Dataset, case: TestCase, backend) -> CaseResult:
    expected_text = NO_ACTION if case.expected_command is None else case.expected_command.render()
    prompt = case_prompt_text(dataset, case)
    try:
        raw = backend.complete(
            prompt,
            agent_id=case.point.agent_config_ref,
            new_events=case.point.window_texts(),
        )
    except BackendError as exc:
        return CaseResult(
            case_id=case.id,
            suite=case.id.rsplit("/", 1)[0],
            category=case.category,
            verdict=INFRA_FAILURE,
            expected_command=expected_text,
            produced_command=None,
            produced_reason=None,
            detail=str(exc),
        )
    suite_name = case.id.rsplit("/", 1)[0]
    try:
        output = parse_output(raw)
    except OutputParseError as exc:
        return CaseResult(
            case_id=case.id,
            suite=suite_name,
            category=case.category,
            verdict=PARSE_FAILURE,
            expected_command=expected_text,
            produced_command=None,
            produced_reason=None,
            detail=str(exc),
        )
    matched = output.command == case.expected_command
    return CaseResult(
        case_id=case.id,
        suite=suite_name,
        category=case.category,
        verdict=MATCH if matched else MISMATCH,
        expected_command=expected_text,
        produced_command=output.command_text(),
        produced_reason=output.reason,
    )


def evaluate(
    dataset: Dataset,
    backend,
    workers: int = 1,
    infra_failures_in_denominator: bool = True,
) -> CorrectnessReport:
    """Run every case against the backend and assemble the stratified report."""
    cases = dataset.all_cases()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _judge(dataset, c, backend), cases))
    else:
        results = [_judge(dataset, case, backend) for case in cases]
    return CorrectnessReport(
        results=tuple(results),
        backend_name=getattr(getattr(backend, "descriptor", None), "name", ""),
        infra_failures_in_denominator=infra_failures_in_denominator,
    )


def annotate_plausibility(
    report: CorrectnessReport, annotations: str | Path | Iterable[dict]
) -> CorrectnessReport:
    """Merge human Likert annotations (JSONL of {case_id, plausibility}) into a report."""
    if isinstance(annotations, (str, Path)):
        entries = []
        with open(annotations, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    entries.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise DatasetError(f"annotations line {lineno}: invalid JSON: {exc}") from exc
    else:
        entries = list(annotations)

    known = {r.case_id for r in report.results}
    merged = dict(report.plausibility)
    for entry in entries:
        case_id = entry.get("case_id")
        value = entry.get("plausibility")
        if case_id not in known:
            raise DatasetError(f"annotation references unknown case {case_id!r}")
        if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
            raise DatasetError(
                f"annotation for {case_id!r} must be an integer 1..5, got {value!r}"
            )
        merged[case_id] = value
    return replace(report, plausibility=merged)
