from __future__ import annotations

import json
from importlib import resources

from agentplant.bundled import sample_dataset_path
from agentplant.cli import main


def data_file(name: str, tmp_path):
    text = resources.files("agentplant.data").joinpath(name).read_text(encoding="utf-8")
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_sim_replay_prints_the_golden_trace(tmp_path, capsys, retrieval_golden):
    script = data_file("retrieval.script.jsonl", tmp_path)
    assert main(["sim", "replay", str(script)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines() == retrieval_golden


def test_sim_replay_export_trace(tmp_path, capsys, export_golden):
    script = data_file("export.script.jsonl", tmp_path)
    assert main(["sim", "replay", str(script), "--out-dir", str(tmp_path / "logs")]) == 0
    assert capsys.readouterr().out.splitlines() == export_golden
    assert (tmp_path / "logs" / "events.log").read_text(
        encoding="utf-8"
    ).splitlines() == export_golden


def test_validate_bundled_layout(tmp_path, capsys):
    path = data_file("layout.json", tmp_path)
    assert main(["validate", str(path)]) == 0
    assert "valid layout" in capsys.readouterr().out


def test_validate_rejects_broken_layout(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(
        json.dumps({"modules": [{"name": "M", "tracks": [{"id": "T", "length": 0}]}]}),
        encoding="utf-8",
    )
    assert main(["validate", str(path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_validate_dataset_and_session(tmp_path, capsys):
    assert main(["validate", str(sample_dataset_path())]) == 0
    session = data_file("demo_retrieval.session.json", tmp_path)
    assert main(["validate", str(session), "--kind", "session"]) == 0


def test_eval_oracle_prints_full_marks(capsys):
    assert main(["eval", str(sample_dataset_path()), "--backend", "oracle"]) == 0
    out = capsys.readouterr().out
    routine_line = next(l for l in out.splitlines() if l.startswith("routine"))
    assert "100.0%" in routine_line


def test_eval_exit_code_zero_even_with_mismatches(tmp_path, capsys):
    # The bundled SOP oracle cannot answer the unexpected cases; rates drop but
    # the run still succeeds: the report is the product.
    report_path = tmp_path / "report.json"
    assert (
        main(
            [
                "eval",
                str(sample_dataset_path()),
                "--backend",
                "storage-oracle",
                "--report",
                str(report_path),
            ]
        )
        == 0
    )
    out = capsys.readouterr().out
    assert "unexpected" in out
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert report["overall"]["rate"] < 1.0
    assert report["routine"]["rate"] == 1.0


def test_eval_with_annotations(tmp_path, capsys):
    from agentplant.dataset.io import import_tests

    ds = import_tests(sample_dataset_path())
    annotations = tmp_path / "ann.jsonl"
    annotations.write_text(
        "\n".join(
            json.dumps({"case_id": c.id, "plausibility": 5}) for c in ds.all_cases()
        )
        + "\n",
        encoding="utf-8",
    )
    assert (
        main(
            [
                "eval",
                str(sample_dataset_path()),
                "--backend",
                "oracle",
                "--annotations",
                str(annotations),
            ]
        )
        == 0
    )
    assert "5.0 (10/10 annotated)" in capsys.readouterr().out


def test_eval_unknown_backend_fails(capsys):
    assert main(["eval", str(sample_dataset_path()), "--backend", "nope"]) == 2
    assert "unknown backend" in capsys.readouterr().err


def test_record_writes_a_dataset(tmp_path, capsys):
    config = data_file("record_export.session.json", tmp_path)
    out = tmp_path / "suite.dataset.jsonl"
    assert (
        main(
            [
                "record",
                str(config),
                "--task-description",
                "storage export routine",
                "--out",
                str(out),
            ]
        )
        == 0
    )
    assert "recorded 4 case(s)" in capsys.readouterr().out

    sft = tmp_path / "sft.jsonl"
    assert main(["export", "sft", str(out), str(sft)]) == 0
    records = [json.loads(l) for l in sft.read_text(encoding="utf-8").splitlines()]
    assert len(records) == 4
    assert all(set(r) == {"prompt", "completion"} for r in records)

    copy = tmp_path / "copy.dataset.jsonl"
    assert main(["export", "tests", str(out), str(copy)]) == 0
    from agentplant.dataset.io import import_tests

    assert import_tests(copy) == import_tests(out)


def test_missing_file_is_a_clean_error(capsys):
    assert main(["eval", "does-not-exist.jsonl"]) == 1
    assert "error:" in capsys.readouterr().err
