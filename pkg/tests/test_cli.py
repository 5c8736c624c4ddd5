import json

from foleysim.cli import main
from foleysim.session import import_session
from tests.conftest import FIXTURES


def test_simulate_writes_deterministic_event_log(tmp_path):
    out1 = tmp_path / "events1.jsonl"
    out2 = tmp_path / "events2.jsonl"
    for out in (out1, out2):
        code = main(
            [
                "simulate",
                "--scene", str(FIXTURES / "scenes" / "robot.json"),
                "--trace", str(FIXTURES / "traces" / "robot.jsonl"),
                "--duration", "3.0",
                "--out", str(out),
            ]
        )
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = [json.loads(l) for l in out1.read_text().splitlines()]
    assert len(lines) == 10
    assert lines[0]["event_type"] == "ShowUp"


def test_sonify_batch_from_scene_and_trace(tmp_path):
    out = tmp_path / "session"
    code = main(
        [
            "sonify-batch",
            "--scene", str(FIXTURES / "scenes" / "robot.json"),
            "--trace", str(FIXTURES / "traces" / "robot.jsonl"),
            "--duration", "3.0",
            "--library", str(FIXTURES / "library"),
            "--out", str(out),
        ]
    )
    assert code == 0
    imported = import_session(out)
    assert len(imported.records) == 7
    for event_id, methods in imported.candidates.items():
        assert len([m for m, assets in methods.items() if assets]) >= 3


def test_sonify_batch_from_events_file(tmp_path):
    events_path = tmp_path / "events.jsonl"
    main(
        [
            "simulate",
            "--scene", str(FIXTURES / "scenes" / "robot.json"),
            "--trace", str(FIXTURES / "traces" / "robot.jsonl"),
            "--duration", "3.0",
            "--out", str(events_path),
        ]
    )
    out = tmp_path / "session"
    code = main(
        [
            "sonify-batch",
            "--events", str(events_path),
            "--library", str(FIXTURES / "library"),
            "--out", str(out),
        ]
    )
    assert code == 0
    imported = import_session(out)
    assert len(imported.records) == 7


def test_sonify_batch_requires_inputs(tmp_path, capsys):
    code = main(["sonify-batch", "--out", str(tmp_path / "x")])
    assert code == 2


def test_cli_reports_domain_errors(tmp_path, capsys):
    code = main(
        [
            "simulate",
            "--scene", str(tmp_path / "missing.json"),
            "--trace", str(FIXTURES / "traces" / "robot.jsonl"),
            "--out", str(tmp_path / "out.jsonl"),
        ]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err
