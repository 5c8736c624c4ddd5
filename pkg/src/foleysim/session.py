"""Session orchestration: the full demonstrate-and-sonify loop as a service.

Threading model: one owner processes all session mutations. Mutations arrive
as closures on an inbox queue; acquisition work runs on a bounded thread
pool whose completions post closures back to the inbox. In real-time mode a
runner thread owns the inbox and paces the simulator against the wall clock
(never blocking on acquisition); in inline mode (batch pipeline, tests) the
calling thread is the owner and drains the inbox explicitly.

Each new unique event fans out through the controller into one acquisition
job per parsed command. Job failures are isolated: a dead service fails its
own job and nothing else.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import queue
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional

from .acquisition import (
    AcqMethod,
    CandidateSet,
    GenerationClient,
    HttpGenerationClient,
    HttpRetrievalClient,
    LibraryIndex,
    MockGenerationClient,
    MockRetrievalClient,
    RetrievalClient,
    SoundAsset,
    default_seed_for,
    generate_sound,
    recommend_local,
    retrieve_online,
    transfer_sound,
)
from .audio import write_wav
from .config import Config
from .controller import (
    ChatBackend,
    ControllerCommand,
    HttpChatBackend,
    Method,
    MockChatBackend,
    build_controller_request,
    parse_commands,
)
from .engine import (
    ArEvent,
    EventLog,
    EventRecord,
    SessionState,
    UserAction,
    event_from_dict,
    event_to_dict,
    init_state,
    run_trace,
)
from .errors import (
    FoleysimError,
    NotACandidate,
    SchemaMismatch,
    UnknownAsset,
    UnknownEvent,
)
from .materials import MaterialLabel, PlaneMask, assign_plane_materials, load_label_image, material_from_token
from .scene import Scene, load_scene
from .textualize import render_event_text

logger = logging.getLogger(__name__)

SESSION_SCHEMA_VERSION = 1

_METHOD_NAMES = {
    Method.RECOMMEND: "recommend",
    Method.RETRIEVE: "retrieve",
    Method.GENERATE: "generate",
    Method.TRANSFER: "transfer",
}
_METHOD_TO_ACQ = {
    Method.RECOMMEND: AcqMethod.RECOMMENDED,
    Method.RETRIEVE: AcqMethod.RETRIEVED,
    Method.GENERATE: AcqMethod.GENERATED,
    Method.TRANSFER: AcqMethod.TRANSFERRED,
}


class JobState(Enum):
    PENDING = "pending"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"


_VALID_TRANSITIONS = {
    JobState.PENDING: {JobState.RUNNING},
    JobState.RUNNING: {JobState.DONE, JobState.FAILED},
    JobState.DONE: set(),
    JobState.FAILED: set(),
}


@dataclass
class AcquisitionJob:
    job_id: str
    event_id: str
    method: str
    state: JobState = JobState.PENDING
    reason: Optional[str] = None
    asset_ids: list[str] = field(default_factory=list)
    rank: int = 0
    started_at: Optional[float] = None
    finished_at: Optional[float] = None

    def _to(self, new: JobState) -> None:
        if new not in _VALID_TRANSITIONS[self.state]:
            raise ValueError(f"job {self.job_id}: invalid transition {self.state} -> {new}")
        self.state = new

    def mark_running(self, at: float) -> None:
        self._to(JobState.RUNNING)
        self.started_at = at

    def mark_done(self, asset_ids: list[str], at: float) -> None:
        if not asset_ids:
            raise ValueError(f"job {self.job_id}: Done requires at least one asset")
        self._to(JobState.DONE)
        self.asset_ids = list(asset_ids)
        self.finished_at = at

    def mark_failed(self, reason: str, at: float) -> None:
        self._to(JobState.FAILED)
        self.reason = reason
        self.finished_at = at

    def snapshot(self) -> dict:
        return {
            "job_id": self.job_id,
            "event_id": self.event_id,
            "method": self.method,
            "state": self.state.value,
            "reason": self.reason,
            "asset_ids": list(self.asset_ids),
            "rank": self.rank,
        }


@dataclass
class Subscription:
    q: "queue.Queue[dict]"
    backlog: list[dict]


class SessionService:
    """The session owner. See the module docstring for the threading model."""

    def __init__(
        self,
        scene: Scene,
        config: Optional[Config] = None,
        *,
        materials: Optional[dict[str, MaterialLabel]] = None,
        backend: Optional[ChatBackend] = None,
        retrieval_client: Optional[RetrievalClient] = None,
        generation_client: Optional[GenerationClient] = None,
        library: Optional[LibraryIndex] = None,
        session_id: Optional[str] = None,
        scene_path: Optional[str] = None,
    ) -> None:
        self.config = config or Config()
        self.scene = scene
        self.scene_path = scene_path
        self.materials = materials if materials is not None else {
            p.id: material_from_token(p.material) for p in scene.planes
        }
        self.state: SessionState = init_state(scene, self.materials)
        self.session_id = session_id or f"session-{int(time.time() * 1000):x}"

        self.backend = backend if backend is not None else _default_backend(self.config)
        self.retrieval_client = (
            retrieval_client if retrieval_client is not None else _default_retrieval(self.config)
        )
        self.generation_client = (
            generation_client if generation_client is not None else _default_generation(self.config)
        )
        self.library = library if library is not None else _default_library(self.config)

        self.log = EventLog()
        self.candidates: dict[str, CandidateSet] = {}
        self.event_texts: dict[str, str] = {}
        self.selections: dict[str, str] = {}
        self.assets: dict[str, SoundAsset] = {}
        self.jobs: dict[str, AcquisitionJob] = {}
        self.emission_lates: list[tuple[float, float]] = []  # (sim ts, wall lateness)

        self._inbox: "queue.Queue[tuple[Callable[[], object], Optional[Future]]]" = queue.Queue()
        self._executor = ThreadPoolExecutor(max_workers=self.config.session.max_workers)
        self._outstanding = 0
        self._rank_counters: dict[tuple[str, str], int] = {}
        self._history: list[dict] = []
        self._subscribers: list["queue.Queue[dict]"] = []
        self._sub_lock = threading.Lock()
        self._seq = 0

        self._runner_thread: Optional[threading.Thread] = None
        self._stop = threading.Event()

    # ------------------------------------------------------------------
    # Owner-loop plumbing

    def _post(self, fn: Callable[[], object]) -> None:
        self._inbox.put((fn, None))

    def _run_item(self, fn: Callable[[], object], fut: Optional[Future]) -> None:
        if fut is None:
            try:
                fn()
            except Exception:
                logger.exception("owner task failed")
        else:
            try:
                fut.set_result(fn())
            except Exception as exc:
                fut.set_exception(exc)

    def _process_pending(self) -> None:
        while True:
            try:
                fn, fut = self._inbox.get_nowait()
            except queue.Empty:
                return
            self._run_item(fn, fut)

    def call(self, fn: Callable[[], object], timeout: float = 10.0):
        """Run fn on the session owner and return its result."""
        if self._runner_thread is not None and self._runner_thread.is_alive():
            fut: Future = Future()
            self._inbox.put((fn, fut))
            return fut.result(timeout=timeout)
        self._process_pending()
        return fn()

    def _submit(self, work: Callable[[], Callable[[], None]]) -> None:
        """Run ``work`` on the pool; its returned closure is applied owner-side."""
        self._outstanding += 1

        def run() -> None:
            try:
                finish = work()
            except Exception as exc:  # defensive: worker closures catch their own
                logger.exception("worker task crashed")
                finish = lambda: None  # noqa: E731
            def finalize() -> None:
                try:
                    finish()
                finally:
                    self._outstanding -= 1
            self._inbox.put((finalize, None))

        self._executor.submit(run)

    def drain(self, timeout: float = 60.0) -> None:
        """Inline mode: process inbox until every spawned task has settled."""
        deadline = time.monotonic() + timeout
        while self._outstanding > 0:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError(f"drain timed out with {self._outstanding} tasks outstanding")
            try:
                fn, fut = self._inbox.get(timeout=remaining)
            except queue.Empty:
                continue
            self._run_item(fn, fut)
        self._process_pending()

    def close(self) -> None:
        self.stop_realtime()
        self._executor.shutdown(wait=True)
        self._process_pending()

    # ------------------------------------------------------------------
    # Stream broadcast

    def _broadcast(self, msg_type: str, data: dict) -> None:
        self._seq += 1
        msg = {"seq": self._seq, "type": msg_type, "data": data}
        with self._sub_lock:
            self._history.append(msg)
            for q in self._subscribers:
                q.put(msg)

    def subscribe(self, last_seq: int = 0) -> Subscription:
        q: "queue.Queue[dict]" = queue.Queue()
        with self._sub_lock:
            backlog = [m for m in self._history if m["seq"] > last_seq]
            self._subscribers.append(q)
        return Subscription(q=q, backlog=backlog)

    def unsubscribe(self, sub: Subscription) -> None:
        with self._sub_lock:
            if sub.q in self._subscribers:
                self._subscribers.remove(sub.q)

    # ------------------------------------------------------------------
    # Event intake and the acquisition pipeline

    def record_snapshot(self, record: EventRecord) -> dict:
        return {
            "event_id": record.event_id,
            "event_type": record.first_event.event_type.value,
            "text": self.event_texts.get(record.event_id, ""),
            "occurrence_count": record.occurrence_count,
            "selected_asset": record.selected_asset,
            "timestamp": record.first_event.timestamp,
            "dedupe_key": record.key.as_string(),
        }

    def on_sim_event(self, e: ArEvent) -> None:
        """Owner-side: register one raw simulator event."""
        is_new, record = self.log.register(e)
        if is_new:
            self.candidates[record.event_id] = CandidateSet(record.event_id)
            self.event_texts[record.event_id] = render_event_text(e)
            self._broadcast("event", self.record_snapshot(record))
            self.on_new_event(record)
        else:
            self._broadcast("event_update", self.record_snapshot(record))
            selected = self.selections.get(record.event_id)
            if selected:
                self._broadcast(
                    "playback",
                    {
                        "event_id": record.event_id,
                        "asset_id": selected,
                        "timestamp": e.timestamp,
                    },
                )

    def on_new_event(self, record: EventRecord) -> None:
        """Textualize, consult the controller off-thread, then spawn jobs."""
        text = self.event_texts[record.event_id]
        bundle = build_controller_request(text, self.library)
        backend = self.backend

        def work() -> Callable[[], None]:
            try:
                reply = backend.complete(bundle)
                parsed = parse_commands(reply)
            except Exception as exc:
                reason = f"{type(exc).__name__}: {exc}"
                return lambda: self._controller_failed(record, reason)
            return lambda: self._spawn_jobs(record, parsed.commands, parsed.diagnostics)

        self._submit(work)

    def _controller_failed(self, record: EventRecord, reason: str) -> None:
        job = self._new_job(record.event_id, "controller")
        job.mark_running(self.state.time)
        job.mark_failed(reason, self.state.time)
        self._broadcast("job", job.snapshot())

    def _spawn_jobs(
        self,
        record: EventRecord,
        commands: tuple[ControllerCommand, ...],
        diagnostics: tuple[str, ...] = (),
    ) -> None:
        for line in diagnostics:
            logger.debug("controller diagnostic for %s: %r", record.event_id, line)
        for command in commands:
            self._spawn_command_job(record, command)

    def _next_rank(self, event_id: str, method: AcqMethod) -> int:
        key = (event_id, method.value)
        rank = self._rank_counters.get(key, 0)
        self._rank_counters[key] = rank + 1
        return rank

    def _new_job(self, event_id: str, method: str, rank: int = 0) -> AcquisitionJob:
        job = AcquisitionJob(
            job_id=f"job-{len(self.jobs) + 1:04d}", event_id=event_id, method=method, rank=rank
        )
        self.jobs[job.job_id] = job
        return job

    def _spawn_command_job(self, record: EventRecord, command: ControllerCommand) -> None:
        acq = _METHOD_TO_ACQ[command.method]
        rank = self._next_rank(record.event_id, acq)
        job = self._new_job(record.event_id, _METHOD_NAMES[command.method], rank=rank)
        self._broadcast("job", job.snapshot())
        created_at = record.first_event.timestamp
        event_type = record.first_event.event_type
        library = self.library
        retrieval = self.retrieval_client
        generation = self.generation_client
        seeds = self.config.session.seeds or None

        def work() -> Callable[[], None]:
            self._post(lambda: self._job_running(job.job_id))
            extra: list[SoundAsset] = []
            try:
                if command.method is Method.RECOMMEND:
                    assets = [recommend_local(command, library, created_at)]
                elif command.method is Method.RETRIEVE:
                    assets = retrieve_online(command, retrieval, created_at)
                elif command.method is Method.GENERATE:
                    assets = [generate_sound(command, generation, created_at)]
                else:
                    seed = default_seed_for(event_type, seeds, created_at)
                    extra.append(seed)
                    assets = [transfer_sound(seed, command, generation, created_at)]
            except FoleysimError as exc:
                reason = f"{type(exc).__name__}: {exc}"
                return lambda: self._job_failed(job.job_id, reason)
            except Exception as exc:
                reason = f"internal: {exc!r}"
                return lambda: self._job_failed(job.job_id, reason)
            return lambda: self._job_done(job.job_id, acq, job.rank, assets, extra)

        self._submit(work)

    def _job_running(self, job_id: str) -> None:
        job = self.jobs[job_id]
        if job.state is JobState.PENDING:
            job.mark_running(self.state.time)
            self._broadcast("job", job.snapshot())

    def _job_failed(self, job_id: str, reason: str) -> None:
        job = self.jobs[job_id]
        if job.state is JobState.PENDING:  # worker died before the running post
            job.mark_running(self.state.time)
        job.mark_failed(reason, self.state.time)
        self._broadcast("job", job.snapshot())

    def _job_done(
        self,
        job_id: str,
        acq: AcqMethod,
        rank: int,
        assets: list[SoundAsset],
        extra: list[SoundAsset],
    ) -> None:
        job = self.jobs[job_id]
        if job.state is JobState.PENDING:
            job.mark_running(self.state.time)
        for asset in extra:
            self._store_asset(asset)
        for asset in assets:
            self._store_asset(asset)
        cs = self.candidates.setdefault(job.event_id, CandidateSet(job.event_id))
        cs.insert(acq, rank, assets)
        job.mark_done([a.asset_id for a in assets], self.state.time)
        snap = job.snapshot()
        snap["assets"] = [a.meta() for a in assets]
        self._broadcast("job", snap)

    @staticmethod
    def _provenance_key(asset: SoundAsset) -> tuple:
        return (
            asset.created_at,
            asset.method.value,
            asset.prompt_or_query,
            asset.source_ref or "",
        )

    def _store_asset(self, asset: SoundAsset) -> None:
        existing = self.assets.get(asset.asset_id)
        if existing is None:
            self.assets[asset.asset_id] = asset
            return
        # Content addressing: identical id must mean identical audio.
        if len(existing.audio) != len(asset.audio) or existing.audio.sample_rate != asset.audio.sample_rate:
            raise SchemaMismatch(f"asset id collision for {asset.asset_id}")
        # The same audio can be produced by several acquisitions (e.g. one
        # library clip recommended for two events). Keep the provenance that
        # sorts first so the stored metadata never depends on completion order.
        if self._provenance_key(asset) < self._provenance_key(existing):
            self.assets[asset.asset_id] = asset

    # ------------------------------------------------------------------
    # Authoring operations (call on the owner via .call in live mode)

    def select_sound(self, event_id: str, asset_id: str) -> dict:
        record = self.log.get(event_id)
        if record is None:
            raise UnknownEvent(f"no event {event_id!r}")
        cs = self.candidates.get(event_id)
        if cs is None or asset_id not in cs.asset_ids():
            raise NotACandidate(f"asset {asset_id!r} is not a candidate of event {event_id!r}")
        self.selections[event_id] = asset_id
        record.selected_asset = asset_id
        self._broadcast("selection", {"event_id": event_id, "asset_id": asset_id})
        return {"event_id": event_id, "asset_id": asset_id}

    def request_transfer(
        self, event_id: str, asset_id: str, prompt: str, mode: str = "transfer"
    ) -> dict:
        """Spawn a user-initiated transfer (or generate-similar) job."""
        record = self.log.get(event_id)
        if record is None:
            raise UnknownEvent(f"no event {event_id!r}")
        parent = self.assets.get(asset_id)
        if parent is None:
            raise UnknownAsset(f"no asset {asset_id!r}")
        created_at = self.state.time
        generation = self.generation_client
        if mode == "similar":
            command = ControllerCommand(
                Method.GENERATE, f"{parent.prompt_or_query} {prompt}".strip()
            )
            acq = AcqMethod.GENERATED
            job = self._new_job(event_id, "generate", rank=self._next_rank(event_id, acq))

            def work() -> Callable[[], None]:
                self._post(lambda: self._job_running(job.job_id))
                try:
                    asset = generate_sound(command, generation, created_at)
                    asset = dataclasses.replace(asset, source_ref=parent.asset_id)
                except FoleysimError as exc:
                    reason = f"{type(exc).__name__}: {exc}"
                    return lambda: self._job_failed(job.job_id, reason)
                return lambda: self._job_done(job.job_id, acq, job.rank, [asset], [])

        elif mode == "transfer":
            command = ControllerCommand(Method.TRANSFER, prompt)
            acq = AcqMethod.TRANSFERRED
            job = self._new_job(event_id, "transfer", rank=self._next_rank(event_id, acq))

            def work() -> Callable[[], None]:
                self._post(lambda: self._job_running(job.job_id))
                try:
                    asset = transfer_sound(parent, command, generation, created_at)
                except FoleysimError as exc:
                    reason = f"{type(exc).__name__}: {exc}"
                    return lambda: self._job_failed(job.job_id, reason)
                return lambda: self._job_done(job.job_id, acq, job.rank, [asset], [])

        else:
            raise FoleysimError(f"unknown transfer mode {mode!r}")
        self._broadcast("job", job.snapshot())
        self._submit(work)
        return job.snapshot()

    def list_alternatives(self, event_id: str, method: str) -> list[SoundAsset]:
        if self.log.get(event_id) is None:
            raise UnknownEvent(f"no event {event_id!r}")
        cs = self.candidates.get(event_id)
        if cs is None:
            return []
        try:
            acq = AcqMethod(method)
        except ValueError:
            raise UnknownEvent(f"unknown method {method!r}") from None
        return cs.alternates(acq)

    def candidates_snapshot(self, event_id: str) -> dict:
        record = self.log.get(event_id)
        if record is None:
            raise UnknownEvent(f"no event {event_id!r}")
        cs = self.candidates.get(event_id) or CandidateSet(event_id)
        return {
            "event_id": event_id,
            "selected_asset": self.selections.get(event_id),
            "methods": {m.value: [a.meta() for a in cs.ordered(m)] for m in AcqMethod},
        }

    def events_snapshot(self) -> list[dict]:
        rows = []
        for record in self.log.records():
            row = self.record_snapshot(record)
            row["jobs"] = [
                j.snapshot() for j in self.jobs.values() if j.event_id == record.event_id
            ]
            row["candidate_count"] = len(self.candidates.get(record.event_id, CandidateSet("")).all_assets())
            rows.append(row)
        return rows

    def inject_action(self, action_dict: dict) -> dict:
        """Apply a user action at the current simulation time."""
        from .engine import ingest_action

        payload = dict(action_dict)
        payload["timestamp"] = self.state.time
        action = UserAction.from_dict(payload)
        events = ingest_action(self.state, action)
        for e in events:
            self.on_sim_event(e)
        return {"accepted": True, "events": len(events)}

    # ------------------------------------------------------------------
    # Batch and real-time drivers

    def run_batch(self, actions: list[UserAction], duration: Optional[float] = None) -> None:
        """Headless pipeline: replay the trace, then settle every job."""

        def emit(batch: list[ArEvent]) -> None:
            for e in batch:
                self.on_sim_event(e)

        run_trace(self.state, actions, self.config.session.dt, duration, emit)
        self.drain()

    def feed_events(self, events: list[ArEvent]) -> None:
        """Headless pipeline over pre-recorded events, then settle."""
        for e in events:
            if e.timestamp > self.state.time:
                self.state.time = e.timestamp
            self.on_sim_event(e)
        self.drain()

    def start_realtime(
        self, trace: Optional[list[UserAction]] = None, duration: Optional[float] = None
    ) -> None:
        """Start the wall-clock-paced runner thread (idempotent)."""
        if self._runner_thread is not None and self._runner_thread.is_alive():
            return
        self._stop.clear()
        pending = sorted(trace or [], key=lambda a: a.timestamp)
        dt = self.config.session.dt

        def loop() -> None:
            from .engine import ingest_action, step_physics

            t0 = time.monotonic()
            next_step = dt
            idx = 0
            while not self._stop.is_set():
                self._process_pending()
                now = time.monotonic() - t0
                stepped = False
                while next_step <= now + 1e-9:
                    while idx < len(pending) and pending[idx].timestamp <= self.state.time + 1e-12:
                        for e in ingest_action(self.state, pending[idx]):
                            self.on_sim_event(e)
                            self.emission_lates.append(
                                (e.timestamp, (time.monotonic() - t0) - e.timestamp)
                            )
                        idx += 1
                    for e in step_physics(self.state, dt):
                        self.on_sim_event(e)
                        self.emission_lates.append(
                            (e.timestamp, (time.monotonic() - t0) - e.timestamp)
                        )
                    next_step += dt
                    stepped = True
                    if duration is not None and self.state.time >= duration - 1e-9:
                        self._stop.set()
                        break
                if not stepped:
                    time.sleep(min(0.002, max(0.0, next_step - now)))
            self._process_pending()

        self._runner_thread = threading.Thread(target=loop, daemon=True)
        self._runner_thread.start()

    def stop_realtime(self, join_timeout: float = 5.0) -> None:
        self._stop.set()
        if self._runner_thread is not None:
            self._runner_thread.join(timeout=join_timeout)
            self._runner_thread = None

    def wait_realtime(self, timeout: float = 60.0) -> None:
        """Block until a duration-bounded realtime run finishes."""
        if self._runner_thread is not None:
            self._runner_thread.join(timeout=timeout)
            if self._runner_thread.is_alive():
                raise TimeoutError("realtime runner did not finish in time")
            self._runner_thread = None

    # ------------------------------------------------------------------
    # Persistence

    def export_doc(self) -> dict:
        return {
            "schema_version": SESSION_SCHEMA_VERSION,
            "session_id": self.session_id,
            "config": self.config.snapshot(),
            "events": [
                {
                    "event_id": r.event_id,
                    "dedupe_key": r.key.as_string(),
                    "occurrence_count": r.occurrence_count,
                    "selected_asset": r.selected_asset,
                    "text": self.event_texts.get(r.event_id, ""),
                    "first_event": event_to_dict(r.first_event),
                }
                for r in self.log.records()
            ],
            "candidates": {
                event_id: {
                    m.value: [a.asset_id for a in cs.ordered(m)]
                    for m in AcqMethod
                    if cs.ordered(m)
                }
                for event_id, cs in sorted(self.candidates.items())
            },
            "selections": dict(sorted(self.selections.items())),
            "assets": {asset_id: a.meta() for asset_id, a in sorted(self.assets.items())},
        }

    def export_session(self, out_dir: str | Path) -> Path:
        """Write session.json plus content-addressed audio blobs."""
        out = Path(out_dir)
        (out / "audio").mkdir(parents=True, exist_ok=True)
        doc = self.export_doc()
        (out / "session.json").write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        for asset_id, asset in sorted(self.assets.items()):
            write_wav(out / "audio" / f"{asset_id}.wav", asset.audio)
        return out


def _default_backend(config: Config) -> ChatBackend:
    if config.controller.backend == "http":
        return HttpChatBackend(config.controller.endpoint, config.controller.api_key)
    return MockChatBackend()


def _default_retrieval(config: Config) -> RetrievalClient:
    if config.retrieval.backend == "http":
        return HttpRetrievalClient(
            config.retrieval.endpoint, config.retrieval.api_token, config.retrieval.timeout_s
        )
    return MockRetrievalClient()


def _default_generation(config: Config) -> GenerationClient:
    if config.generation.backend == "http":
        return HttpGenerationClient(config.generation.endpoint, config.generation.timeout_s)
    return MockGenerationClient()


def _default_library(config: Config) -> LibraryIndex:
    if config.session.library_dir:
        return LibraryIndex.from_dir(config.session.library_dir)
    return LibraryIndex.empty()


def resolve_materials(scene: Scene, scene_dir: Path) -> dict[str, MaterialLabel]:
    """Inline plane materials, overridden by the label image where masked."""
    materials = {p.id: material_from_token(p.material) for p in scene.planes}
    if scene.label_image_path:
        image = load_label_image(scene_dir / scene.label_image_path)
        masks = [
            PlaneMask.from_reference(pid, ref) for pid, ref in sorted(scene.plane_masks.items())
        ]
        materials.update(assign_plane_materials(image, masks))
    return materials


def start_session(
    scene_path: str | Path,
    config: Optional[Config] = None,
    *,
    session_id: Optional[str] = None,
    **service_overrides,
) -> SessionService:
    """Load the scene, assign plane materials, and build the session service.

    Load and validation errors propagate unchanged.
    """
    scene = load_scene(scene_path)
    materials = resolve_materials(scene, Path(scene_path).parent)
    return SessionService(
        scene,
        config,
        materials=materials,
        session_id=session_id,
        scene_path=str(scene_path),
        **service_overrides,
    )


def deterministic_session_id(*parts: bytes) -> str:
    h = hashlib.sha256()
    for part in parts:
        h.update(hashlib.sha256(part).digest())
    return "batch-" + h.hexdigest()[:16]


# --------------------------------------------------------------------------
# Import


@dataclass
class ImportedSession:
    """A session reloaded from disk; structural state only, no services."""

    session_id: str
    config_snapshot: dict
    records: list[dict]
    candidates: dict[str, dict[str, list[str]]]
    selections: dict[str, str]
    assets: dict[str, dict]
    audio_dir: Path

    def export_doc(self) -> dict:
        return {
            "schema_version": SESSION_SCHEMA_VERSION,
            "session_id": self.session_id,
            "config": self.config_snapshot,
            "events": self.records,
            "candidates": self.candidates,
            "selections": self.selections,
            "assets": self.assets,
        }

    def export_session(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        (out / "audio").mkdir(parents=True, exist_ok=True)
        (out / "session.json").write_text(
            json.dumps(self.export_doc(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        for asset_id in sorted(self.assets):
            data = (self.audio_dir / f"{asset_id}.wav").read_bytes()
            (out / "audio" / f"{asset_id}.wav").write_bytes(data)
        return out


def import_session(path: str | Path) -> ImportedSession:
    """Load an exported session, verifying blobs and content addresses."""
    root = Path(path)
    doc_path = root / "session.json"
    if not doc_path.exists():
        raise SchemaMismatch(f"{root}: missing session.json")
    doc = json.loads(doc_path.read_text(encoding="utf-8"))
    if doc.get("schema_version") != SESSION_SCHEMA_VERSION:
        raise SchemaMismatch(f"unsupported session schema {doc.get('schema_version')!r}")
    assets = doc.get("assets", {})
    audio_dir = root / "audio"
    for asset_id in assets:
        blob = audio_dir / f"{asset_id}.wav"
        if not blob.exists():
            raise SchemaMismatch(f"missing audio blob for asset {asset_id}")
        digest = hashlib.sha256(blob.read_bytes()).hexdigest()
        if digest != asset_id:
            raise SchemaMismatch(f"audio blob does not match asset id {asset_id}")
    for record in doc.get("events", []):
        event_from_dict(record["first_event"])  # must parse back cleanly
    selections = doc.get("selections", {})
    candidates = doc.get("candidates", {})
    for event_id, asset_id in selections.items():
        listed = {a for method_assets in candidates.get(event_id, {}).values() for a in method_assets}
        if asset_id not in listed:
            raise SchemaMismatch(f"selection for {event_id} references non-candidate {asset_id}")
    return ImportedSession(
        session_id=doc["session_id"],
        config_snapshot=doc.get("config", {}),
        records=doc.get("events", []),
        candidates=candidates,
        selections=selections,
        assets=assets,
        audio_dir=audio_dir,
    )


def export_dir_digest(path: str | Path) -> str:
    """Stable content hash of an export directory (paths plus bytes)."""
    root = Path(path)
    h = hashlib.sha256()
    for file in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(str(file.relative_to(root)).encode("utf-8"))
        h.update(b"\0")
        h.update(file.read_bytes())
        h.update(b"\0")
    return h.hexdigest()
