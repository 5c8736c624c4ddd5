"""Command-line entry points.

  foleysim simulate    --scene S --trace T --out events.jsonl
  foleysim sonify-batch --events events.jsonl --out session/   (or --scene/--trace)
  foleysim serve       --scene S [--config C] [--port N]
  foleysim mock-services                                       (live-config demos)
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import Config, load_config
from .engine import read_events, read_trace, replay, serialize_events
from .errors import FoleysimError
from .scene import load_scene
from .session import (
    SessionService,
    deterministic_session_id,
    resolve_materials,
    start_session,
)


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML-style config file", default=None)


def cmd_simulate(args: argparse.Namespace) -> int:
    scene = load_scene(args.scene)
    materials = resolve_materials(scene, Path(args.scene).parent)
    actions = read_trace(args.trace)
    events = replay(scene, actions, dt=args.dt, duration=args.duration, materials=materials)
    Path(args.out).write_text(serialize_events(events), encoding="utf-8")
    print(f"simulated {len(events)} events -> {args.out}")
    return 0


def cmd_sonify_batch(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else Config()
    if args.library:
        config.session.library_dir = args.library
    id_parts = [b"sonify-batch"]

    if args.events:
        events = read_events(args.events)
        id_parts.append(Path(args.events).read_bytes())
        service = SessionService(
            _scene_for_events(args), config, session_id=deterministic_session_id(*id_parts)
        )
        service.feed_events(events)
    else:
        if not (args.scene and args.trace):
            print("sonify-batch needs --events, or --scene and --trace", file=sys.stderr)
            return 2
        id_parts.append(Path(args.scene).read_bytes())
        id_parts.append(Path(args.trace).read_bytes())
        scene = load_scene(args.scene)
        materials = resolve_materials(scene, Path(args.scene).parent)
        service = SessionService(
            scene,
            config,
            materials=materials,
            session_id=deterministic_session_id(*id_parts),
            scene_path=args.scene,
        )
        service.run_batch(read_trace(args.trace), duration=args.duration)

    service.close()
    out = service.export_session(args.out)
    records = service.log.records()
    done = sum(1 for j in service.jobs.values() if j.state.value == "done")
    failed = sum(1 for j in service.jobs.values() if j.state.value == "failed")
    print(f"{len(records)} unique events, {done} jobs done, {failed} failed -> {out}")
    for record in records:
        cs = service.candidates.get(record.event_id)
        methods = ",".join(m.value for m in cs.methods_present()) if cs else ""
        print(f"  {record.event_id} x{record.occurrence_count} [{methods}]"
              f" {service.event_texts.get(record.event_id, '')}")
    return 0


def _scene_for_events(args: argparse.Namespace):
    # Events carry their own context; a scene is only needed when provided.
    if args.scene:
        return load_scene(args.scene)
    from .scene import Scene

    return Scene(objects=(), planes=())


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    config = load_config(args.config) if args.config else Config()
    if args.library:
        config.session.library_dir = args.library
    service = start_session(args.scene, config)
    trace = read_trace(args.trace) if args.trace else None
    service.start_realtime(trace=trace)
    app = create_app(service, frontend_dir=args.frontend)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    finally:
        service.close()
    return 0


def cmd_mock_services(args: argparse.Namespace) -> int:
    import time

    from .acquisition import _load_retrieval_corpus
    from .mockservers import start_generation_server, start_retrieval_server

    retrieval = start_retrieval_server(_load_retrieval_corpus())
    generation = start_generation_server()
    print(f"retrieval:  {retrieval.base_url}")
    print(f"generation: {generation.base_url}")
    print("Ctrl-C to stop")
    try:
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        retrieval.stop()
        generation.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foleysim")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="replay a trace and write the event log")
    p.add_argument("--scene", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dt", type=float, default=1.0 / 60.0)
    p.add_argument("--duration", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sonify-batch", help="headless full pipeline into a session export")
    p.add_argument("--events", default=None, help="events.jsonl from `simulate`")
    p.add_argument("--scene", default=None)
    p.add_argument("--trace", default=None)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--library", default=None, help="override library directory")
    _add_config_arg(p)
    p.set_defaults(func=cmd_sonify_batch)

    p = sub.add_parser("serve", help="run the live session HTTP service")
    p.add_argument("--scene", required=True)
    p.add_argument("--trace", default=None, help="optional scripted actions")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--library", default=None)
    p.add_argument("--frontend", default=None, help="static directory for the authoring panel")
    _add_config_arg(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("mock-services", help="run the mock retrieval/generation HTTP services")
    p.set_defaults(func=cmd_mock_services)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FoleysimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
