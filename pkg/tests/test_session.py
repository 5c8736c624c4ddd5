import json

import pytest

from foleysim.acquisition import AcqMethod, MockRetrievalClient
from foleysim.audio import write_wav, tone_burst
from foleysim.config import Config
from foleysim.controller import MockChatBackend
from foleysim.engine import (
    Actor,
    ArEvent,
    ContextSnapshot,
    EventType,
    Target,
    read_trace,
)
from foleysim.errors import NotACandidate, ParseError, SchemaMismatch, UnknownAsset, UnknownEvent
from foleysim.materials import MaterialLabel
from foleysim.scene import JointCollider, Plane, Scene, VirtualObject
from foleysim.session import (
    JobState,
    SessionService,
    export_dir_digest,
    import_session,
    start_session,
)
from tests.conftest import FIXTURES, SMALL_LIBRARY_NAMES


def tiny_scene():
    return Scene(
        objects=(
            VirtualObject(
                id="robot",
                name="toy robot",
                description="This model is a toy robot made of metal.",
                position=(0, 0.5, 0),
                joints=(JointCollider("body", (0, 0, 0), 0.05),),
            ),
        ),
        planes=(
            Plane(id="table", anchor=(0, 0, 0), normal=(0, 1, 0), extents=(2, 2), material="wood"),
        ),
    )


def collide_event(t=1.0):
    return ArEvent(
        EventType.COLLIDE,
        Actor.object("robot"),
        Target.plane("table"),
        t,
        ContextSnapshot(
            source_name="toy robot",
            source_description="This model is a toy robot made of metal.",
            target_material="wood",
        ),
    )


def show_up_event(t=0.5):
    return ArEvent(
        EventType.SHOW_UP,
        Actor.object("robot"),
        None,
        t,
        ContextSnapshot(
            source_name="toy robot",
            source_description="This model is a toy robot made of metal.",
        ),
    )


def small_library_config(tmp_path, names=SMALL_LIBRARY_NAMES):
    lib = tmp_path / "lib"
    lib.mkdir(parents=True, exist_ok=True)
    for i, name in enumerate(names):
        write_wav(lib / f"{name}.wav", tone_burst(210 + 31 * i, 0.15))
    config = Config()
    config.session.library_dir = str(lib)
    return config


def make_service(tmp_path, names=SMALL_LIBRARY_NAMES, **overrides):
    return SessionService(tiny_scene(), small_library_config(tmp_path, names), **overrides)


# ---------------------------------------------------------------------------
# Pipeline fan-out


def test_collide_event_spawns_four_jobs_all_done(tmp_path):
    svc = make_service(tmp_path)
    svc.on_sim_event(collide_event())
    svc.drain()
    jobs = list(svc.jobs.values())
    assert sorted(j.method for j in jobs) == ["generate", "recommend", "retrieve", "transfer"]
    assert all(j.state is JobState.DONE for j in jobs)
    record = svc.log.records()[0]
    cs = svc.candidates[record.event_id]
    assert {m.value for m in cs.methods_present()} == {
        "recommended",
        "retrieved",
        "generated",
        "transferred",
    }


def test_show_up_event_spawns_three_jobs(tmp_path):
    # One library file overlaps the show-up text ("metal", "robot"); no
    # transfer command applies, leaving recommend + retrieve + generate.
    names = ["Metal Robot Servo Whir", "Liquid Mud Suction"]
    svc = make_service(tmp_path, names=names)
    svc.on_sim_event(show_up_event())
    svc.drain()
    assert sorted(j.method for j in svc.jobs.values()) == ["generate", "recommend", "retrieve"]
    assert all(j.state is JobState.DONE for j in svc.jobs.values())


def test_controller_failure_yields_single_failed_job(tmp_path):
    svc = make_service(tmp_path, backend=MockChatBackend(fail=True))
    svc.on_sim_event(collide_event())
    svc.drain()
    jobs = list(svc.jobs.values())
    assert len(jobs) == 1
    assert jobs[0].method == "controller"
    assert jobs[0].state is JobState.FAILED
    assert "ServiceUnavailable" in jobs[0].reason
    record = svc.log.records()[0]
    assert svc.candidates[record.event_id].all_assets() == []


def test_retrieval_outage_fails_only_its_job(tmp_path):
    svc = make_service(tmp_path, retrieval_client=MockRetrievalClient(fail=True))
    svc.on_sim_event(collide_event())
    svc.drain()
    by_method = {j.method: j for j in svc.jobs.values()}
    assert by_method["retrieve"].state is JobState.FAILED
    assert "ServiceUnavailable" in by_method["retrieve"].reason
    for method in ("recommend", "generate", "transfer"):
        assert by_method[method].state is JobState.DONE


def test_transfer_asset_duration_matches_seed(tmp_path):
    svc = make_service(tmp_path)
    svc.on_sim_event(collide_event())
    svc.drain()
    record = svc.log.records()[0]
    transferred = svc.candidates[record.event_id].primary(AcqMethod.TRANSFERRED)
    seed = svc.assets[transferred.source_ref]
    assert len(transferred.audio) == len(seed.audio)


# ---------------------------------------------------------------------------
# Selection and playback


def selected_service(tmp_path):
    svc = make_service(tmp_path)
    svc.on_sim_event(collide_event(1.0))
    svc.drain()
    record = svc.log.records()[0]
    generated = svc.candidates[record.event_id].primary(AcqMethod.GENERATED)
    svc.select_sound(record.event_id, generated.asset_id)
    return svc, record, generated


def playback_messages(svc):
    return [m for m in svc.subscribe().backlog if m["type"] == "playback"]


def test_selection_triggers_playback_on_next_occurrence(tmp_path):
    svc, record, generated = selected_service(tmp_path)
    assert playback_messages(svc) == []
    svc.on_sim_event(collide_event(2.0))
    msgs = playback_messages(svc)
    assert len(msgs) == 1
    assert msgs[0]["data"] == {
        "event_id": record.event_id,
        "asset_id": generated.asset_id,
        "timestamp": 2.0,
    }
    assert record.occurrence_count == 2


def test_reselection_switches_playback(tmp_path):
    svc, record, generated = selected_service(tmp_path)
    recommended = svc.candidates[record.event_id].primary(AcqMethod.RECOMMENDED)
    svc.select_sound(record.event_id, recommended.asset_id)
    svc.on_sim_event(collide_event(3.0))
    msgs = playback_messages(svc)
    assert msgs[-1]["data"]["asset_id"] == recommended.asset_id


def test_unselected_event_plays_nothing(tmp_path):
    svc = make_service(tmp_path)
    svc.on_sim_event(collide_event(1.0))
    svc.drain()
    svc.on_sim_event(collide_event(2.0))
    assert playback_messages(svc) == []


def test_select_rejects_foreign_asset(tmp_path):
    svc, record, _ = selected_service(tmp_path)
    svc.on_sim_event(show_up_event(4.0))
    svc.drain()
    other = svc.log.records()[1]
    other_asset = svc.candidates[other.event_id].primary(AcqMethod.GENERATED)
    with pytest.raises(NotACandidate):
        svc.select_sound(record.event_id, other_asset.asset_id)
    with pytest.raises(UnknownEvent):
        svc.select_sound("evt-9999", other_asset.asset_id)


# ---------------------------------------------------------------------------
# User-initiated transfer and generate-similar


def test_request_transfer_appends_with_lineage(tmp_path):
    svc, record, generated = selected_service(tmp_path)
    job = svc.request_transfer(record.event_id, generated.asset_id, "more metallic")
    svc.drain()
    job_obj = svc.jobs[job["job_id"]]
    assert job_obj.state is JobState.DONE
    (new_id,) = job_obj.asset_ids
    new_asset = svc.assets[new_id]
    assert new_asset.source_ref == generated.asset_id
    assert len(new_asset.audio) == len(generated.audio)
    transferred = svc.candidates[record.event_id].ordered(AcqMethod.TRANSFERRED)
    assert new_id in [a.asset_id for a in transferred]


def test_repeat_transfer_same_prompt_dedupes(tmp_path):
    svc, record, generated = selected_service(tmp_path)
    svc.request_transfer(record.event_id, generated.asset_id, "more metallic")
    svc.drain()
    before = [a.asset_id for a in svc.candidates[record.event_id].ordered(AcqMethod.TRANSFERRED)]
    svc.request_transfer(record.event_id, generated.asset_id, "more metallic")
    svc.drain()
    after = [a.asset_id for a in svc.candidates[record.event_id].ordered(AcqMethod.TRANSFERRED)]
    assert before == after  # identical asset id collapsed in the candidate set


def test_generate_similar_mode(tmp_path):
    svc, record, generated = selected_service(tmp_path)
    before = len(svc.candidates[record.event_id].ordered(AcqMethod.GENERATED))
    job = svc.request_transfer(record.event_id, generated.asset_id, "but sharper", mode="similar")
    svc.drain()
    job_obj = svc.jobs[job["job_id"]]
    assert job_obj.state is JobState.DONE
    assert job_obj.method == "generate"
    after = svc.candidates[record.event_id].ordered(AcqMethod.GENERATED)
    assert len(after) == before + 1
    new_asset = svc.assets[job_obj.asset_ids[0]]
    assert new_asset.source_ref == generated.asset_id
    assert new_asset.prompt_or_query.endswith("but sharper")


def test_request_transfer_unknown_asset(tmp_path):
    svc, record, _ = selected_service(tmp_path)
    with pytest.raises(UnknownAsset):
        svc.request_transfer(record.event_id, "deadbeef", "x")


# ---------------------------------------------------------------------------
# Alternatives


def test_alternatives_for_five_scoring_files(tmp_path):
    names = [f"Wood Variant {i}" for i in range(5)]
    svc = make_service(tmp_path, names=names)
    svc.on_sim_event(collide_event())
    svc.drain()
    record = svc.log.records()[0]
    alts = svc.list_alternatives(record.event_id, "recommended")
    assert len(alts) == 4
    assert svc.list_alternatives(record.event_id, "generated") == []
    with pytest.raises(UnknownEvent):
        svc.list_alternatives("evt-9999", "recommended")


# ---------------------------------------------------------------------------
# start_session


def test_start_session_assigns_fixture_materials(batch_config):
    svc = start_session(FIXTURES / "scenes" / "robot.json", batch_config)
    assert svc.materials["table"] == MaterialLabel.WOOD
    assert svc.materials["floor"] == MaterialLabel.CARPET


def test_start_session_without_label_image_defaults_unknown(tmp_path):
    doc = {
        "schema_version": 1,
        "objects": [],
        "planes": [
            {"id": "p", "anchor": [0, 0, 0], "normal": [0, 1, 0], "extents": [1, 1]}
        ],
    }
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    svc = start_session(path, Config())
    assert svc.materials["p"] == MaterialLabel.UNKNOWN


def test_start_session_bad_path_is_parse_error():
    with pytest.raises(ParseError):
        start_session("/nonexistent/scene.json", Config())


# ---------------------------------------------------------------------------
# Persistence


def run_golden_like_session(tmp_path, session_id="golden-test"):
    config = Config()
    config.session.library_dir = str(FIXTURES / "library")
    svc = start_session(
        FIXTURES / "scenes" / "robot.json", config, session_id=session_id
    )
    svc.run_batch(read_trace(FIXTURES / "traces" / "robot.jsonl"), duration=3.0)
    record = svc.log.records()[0]
    asset = svc.candidates[record.event_id].primary(AcqMethod.GENERATED)
    svc.select_sound(record.event_id, asset.asset_id)
    return svc


def test_export_import_round_trip(tmp_path):
    svc = run_golden_like_session(tmp_path)
    out1 = tmp_path / "export1"
    svc.export_session(out1)
    imported = import_session(out1)
    assert imported.session_id == svc.session_id
    assert len(imported.records) == len(svc.log.records())
    assert imported.selections == svc.selections
    out2 = tmp_path / "export2"
    imported.export_session(out2)
    assert export_dir_digest(out1) == export_dir_digest(out2)


def test_import_missing_blob_names_asset(tmp_path):
    svc = run_golden_like_session(tmp_path)
    out = tmp_path / "export"
    svc.export_session(out)
    victim = sorted((out / "audio").glob("*.wav"))[0]
    asset_id = victim.stem
    victim.unlink()
    with pytest.raises(SchemaMismatch, match=asset_id[:16]):
        import_session(out)


def test_import_rejects_corrupt_blob(tmp_path):
    svc = run_golden_like_session(tmp_path)
    out = tmp_path / "export"
    svc.export_session(out)
    victim = sorted((out / "audio").glob("*.wav"))[0]
    victim.write_bytes(victim.read_bytes()[:-4] + b"\x00\x00\x00\x01")
    with pytest.raises(SchemaMismatch, match="does not match"):
        import_session(out)


def test_golden_fixture_loads_with_three_events_and_one_selection():
    imported = import_session(FIXTURES / "sessions" / "golden")
    assert len(imported.records) == 3
    assert len(imported.selections) == 1
    (event_id,) = imported.selections
    listed = {
        a
        for assets in imported.candidates[event_id].values()
        for a in assets
    }
    assert imported.selections[event_id] in listed


# ---------------------------------------------------------------------------
# Job lifecycle invariants


def test_job_state_transitions_are_guarded():
    from foleysim.session import AcquisitionJob

    job = AcquisitionJob(job_id="job-0001", event_id="evt-0001", method="generate")
    with pytest.raises(ValueError):
        job.mark_done(["a"], 0.0)  # Pending -> Done skips Running
    job.mark_running(0.1)
    with pytest.raises(ValueError):
        job.mark_running(0.2)
    with pytest.raises(ValueError):
        job.mark_done([], 0.3)  # Done requires at least one asset
    job.mark_done(["a"], 0.3)
    with pytest.raises(ValueError):
        job.mark_failed("late", 0.4)  # terminal states are final


# ---------------------------------------------------------------------------
# Liveness


def test_no_job_left_running_after_drain(tmp_path):
    svc = make_service(tmp_path)
    for t in (0.5, 1.0):
        svc.on_sim_event(collide_event(t))
        svc.on_sim_event(show_up_event(t + 0.1))
    svc.drain(timeout=30.0)
    assert svc.jobs, "jobs must have been spawned"
    assert all(j.state in (JobState.DONE, JobState.FAILED) for j in svc.jobs.values())
