#!/usr/bin/env python3
"""Regenerate the golden session export fixture (3 unique events, 1 selection).

Run from the repo root after gen_fixtures.py:
    python3 scripts/gen_golden_session.py
"""

from __future__ import annotations

import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from foleysim.acquisition import AcqMethod  # noqa: E402
from foleysim.config import Config  # noqa: E402
from foleysim.engine import UserAction  # noqa: E402
from foleysim.session import start_session  # noqa: E402


def main() -> None:
    config = Config()
    config.session.library_dir = str(REPO / "fixtures" / "library")
    svc = start_session(
        REPO / "fixtures" / "scenes" / "robot.json", config, session_id="golden-0001"
    )
    actions = [
        UserAction("PlaceObject", 0.1, object_id="robot", position=(0.0, 0.4, 0.0)),
        UserAction("TapScreenOnObject", 0.3, object_id="robot"),
        UserAction("TapScreenOnPlane", 0.5, plane_id="table"),
    ]
    svc.run_batch(actions, duration=0.6)
    records = svc.log.records()
    assert len(records) == 3, [r.key.as_string() for r in records]
    first = records[0]
    asset = svc.candidates[first.event_id].primary(AcqMethod.GENERATED)
    svc.select_sound(first.event_id, asset.asset_id)
    out = REPO / "fixtures" / "sessions" / "golden"
    if out.exists():
        shutil.rmtree(out)
    svc.export_session(out)
    print(f"golden session -> {out}")


if __name__ == "__main__":
    main()
