"""Command-line entry points: golden-trace replay, serving, recording, dataset
export and evaluation, and config validation."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agents.backends import load_backends
from .bundled import (
    bundled_backends,
    bundled_layout,
    bundled_rules,
    load_session_config,
)
from .dataset.evaluate import annotate_plausibility, evaluate
from .dataset.io import export_sft, export_tests, import_tests
from .dataset.record import dataset_from_suites, suite_oracle
from .errors import AgentPlantError
from .observer import load_rules
from .session import Session, parse_script, replay_script
from .sim.layout import load_layout


def _load_script_file(path: str):
    return parse_script(Path(path).read_text(encoding="utf-8").splitlines(), source_name=path)


def cmd_sim_replay(args: argparse.Namespace) -> int:
    actions, header = _load_script_file(args.script)
    layout = bundled_layout() if args.layout is None else load_layout(Path(args.layout))
    rules = bundled_rules() if args.rules is None else load_rules(Path(args.rules))
    session = replay_script(
        layout,
        rules,
        actions,
        epoch=header.get("epoch", "12:00:00"),
        run_until=header.get("run_until"),
    )
    for line in session.log.rendered_lines():
        print(line)
    if args.out_dir:
        session.write_logs(args.out_dir)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = load_session_config(args.config)
    session = Session(config)
    app = create_app(session, datasets_dir=args.datasets_dir, ui_dir=args.ui_dir)
    if config.mode == "realtime":
        session.start_realtime()
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    finally:
        session.stop_realtime()
    return 0


def cmd_record(args: argparse.Namespace) -> int:
    config = load_session_config(args.config)
    if args.script:
        actions, header = _load_script_file(args.script)
        config.script = actions
        if config.run_until is None:
            config.run_until = header.get("run_until")
    session = Session(config)
    session.start_recording()
    session.run_to_end()
    suite = session.stop_recording(args.task_description)
    dataset = dataset_from_suites(
        suite.name,
        [suite],
        config,
        provenance=(f"recorded via cli from {args.config}",),
    )
    count = export_tests(dataset, args.out)
    print(f"recorded {count} case(s) into {args.out}")
    if args.log_dir:
        session.write_logs(args.log_dir)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    dataset = import_tests(args.dataset)
    if args.backend == "oracle":
        backend = suite_oracle(dataset)
    else:
        registry = (
            bundled_backends()
            if args.backends is None
            else load_backends(Path(args.backends))
        )
        if args.backend not in registry:
            print(f"unknown backend {args.backend!r}; known: {sorted(registry)}", file=sys.stderr)
            return 2
        backend = registry[args.backend]
    report = evaluate(dataset, backend, workers=args.workers)
    if args.annotations:
        report = annotate_plausibility(report, args.annotations)
    print(report.format_table())
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    # Mismatches are findings, not failures: the report is the product.
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    dataset = import_tests(args.dataset)
    if args.what == "sft":
        count = export_sft(dataset, args.path)
    else:
        count = export_tests(dataset, args.path)
    print(f"wrote {count} record(s) to {args.path}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    path = Path(args.target)
    text = path.read_text(encoding="utf-8")
    kind = args.kind
    if kind == "auto":
        if path.suffixes[-2:] == [".dataset", ".jsonl"] or '"agentplant.dataset"' in text[:400]:
            kind = "dataset"
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError:
                kind = "dataset"
            else:
                if "modules" in data and isinstance(data.get("modules"), list):
                    kind = "layout"
                elif "modules" in data:
                    kind = "rules"
                elif "agents" in data:
                    kind = "agents"
                elif "backends" in data:
                    kind = "backends"
                else:
                    kind = "session"
    if kind == "layout":
        load_layout(text)
    elif kind == "rules":
        load_rules(text)
    elif kind == "agents":
        from .agents.config import load_agent_configs

        layout = bundled_layout() if args.layout is None else load_layout(Path(args.layout))
        load_agent_configs(text, layout)
    elif kind == "backends":
        load_backends(text)
    elif kind == "session":
        load_session_config(path)
    elif kind == "dataset":
        import_tests(path)
    else:
        print(f"unknown kind {kind!r}", file=sys.stderr)
        return 2
    print(f"{args.target}: valid {kind}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agentplant")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="simulator utilities")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)
    replay = sim_sub.add_parser("replay", help="replay a command script and print the event log")
    replay.add_argument("script")
    replay.add_argument("--layout")
    replay.add_argument("--rules")
    replay.add_argument("--out-dir")
    replay.set_defaults(func=cmd_sim_replay)

    serve = sub.add_parser("serve", help="run the HTTP control plane for a session")
    serve.add_argument("config")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--datasets-dir", default="datasets")
    serve.add_argument("--ui-dir", default=None)
    serve.set_defaults(func=cmd_serve)

    record = sub.add_parser("record", help="run a scripted manual session and export the suite")
    record.add_argument("config")
    record.add_argument("--script", help="override the config's command script")
    record.add_argument("--task-description", required=True)
    record.add_argument("--out", required=True)
    record.add_argument("--log-dir")
    record.set_defaults(func=cmd_record)

    ev = sub.add_parser("eval", help="evaluate a dataset against a backend")
    ev.add_argument("dataset")
    ev.add_argument("--backend", default="oracle")
    ev.add_argument("--backends", help="backend registry JSON (default: bundled)")
    ev.add_argument("--annotations", help="JSONL of {case_id, plausibility}")
    ev.add_argument("--workers", type=int, default=1)
    ev.add_argument("--report", help="write the JSON report here")
    ev.set_defaults(func=cmd_eval)

    export = sub.add_parser("export", help="re-export a dataset (tests or sft records)")
    export.add_argument("what", choices=["sft", "tests"])
    export.add_argument("dataset")
    export.add_argument("path")
    export.set_defaults(func=cmd_export)

    validate = sub.add_parser("validate", help="validate a configuration or dataset file")
    validate.add_argument("target")
    validate.add_argument(
        "--kind",
        choices=["auto", "layout", "rules", "agents", "backends", "session", "dataset"],
        default="auto",
    )
    validate.add_argument("--layout", help="layout for agent-config validation")
    validate.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AgentPlantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
