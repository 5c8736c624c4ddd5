import numpy as np
import pytest

from foleysim.acquisition import (
    AcqMethod,
    CandidateSet,
    HttpGenerationClient,
    HttpRetrievalClient,
    LibraryIndex,
    MockGenerationClient,
    MockRetrievalClient,
    RemoteSound,
    default_seed_for,
    generate_sound,
    make_asset,
    recommend_local,
    retrieve_online,
    transfer_sound,
)
from foleysim.audio import content_id, mock_generated_clip, tone_burst
from foleysim.controller import ControllerCommand, Method, tokenize
from foleysim.engine import EventType
from foleysim.errors import (
    EmptyResults,
    NoDefault,
    ServiceUnavailable,
    UnknownFilename,
)
from foleysim.mockservers import start_generation_server, start_retrieval_server


def cmd(method, payload):
    return ControllerCommand(method, payload)


# ---------------------------------------------------------------------------
# Local recommendation


def test_recommend_exact_match(fixture_library):
    asset = recommend_local(cmd(Method.RECOMMEND, "Crash Aluminum Tray Bang"), fixture_library)
    assert asset.method is AcqMethod.RECOMMENDED
    assert asset.source_ref == "Crash Aluminum Tray Bang"
    assert asset.asset_id == content_id(asset.audio)


def test_recommend_case_insensitive_unique(fixture_library):
    exact = recommend_local(cmd(Method.RECOMMEND, "Crash Aluminum Tray Bang"), fixture_library)
    folded = recommend_local(cmd(Method.RECOMMEND, "crash aluminum tray bang"), fixture_library)
    assert folded.asset_id == exact.asset_id
    assert folded.source_ref == "Crash Aluminum Tray Bang"


def test_recommend_hallucinated_filename(fixture_library):
    with pytest.raises(UnknownFilename):
        recommend_local(cmd(Method.RECOMMEND, "Dragon Roar Epic"), fixture_library)


def test_library_requires_unique_names(tmp_path):
    from foleysim.audio import write_wav
    from foleysim.errors import ValidationError

    write_wav(tmp_path / "A.wav", tone_burst(200, 0.1))
    with pytest.raises(ValidationError):
        LibraryIndex([("A", tmp_path / "A.wav"), ("A", tmp_path / "A.wav")])


# ---------------------------------------------------------------------------
# Retrieval


def test_retrieval_rank_order_matches_overlap_oracle():
    client = MockRetrievalClient()
    prompt = "footsteps wood robot"
    assets = retrieve_online(cmd(Method.RETRIEVE, prompt), client)
    assert 1 <= len(assets) <= 5
    # Independent oracle: score every corpus description, sort, take top 5.
    query = set(tokenize(prompt))
    scored = [
        (len(query & set(tokenize(s.description))), s) for s in client.corpus
    ]
    expected = [
        s.id
        for score, s in sorted(
            ((sc, s) for sc, s in scored if sc > 0), key=lambda p: (-p[0], p[1].name, p[1].id)
        )
    ][:5]
    assert [a.source_ref for a in assets] == expected
    assert all(a.method is AcqMethod.RETRIEVED for a in assets)


def test_retrieval_zero_overlap_is_empty_results():
    with pytest.raises(EmptyResults):
        retrieve_online(cmd(Method.RETRIEVE, "zzzz qqqq xyzzy"), MockRetrievalClient())


def test_retrieval_failure_propagates_as_service_unavailable():
    with pytest.raises(ServiceUnavailable):
        retrieve_online(cmd(Method.RETRIEVE, "wood"), MockRetrievalClient(fail=True))


def test_live_retrieval_adapter_against_local_server():
    corpus = [
        RemoteSound("s1", "Wood Hit", "dry wood hit with a stick"),
        RemoteSound("s2", "Metal Hit", "metal hit with a hammer"),
    ]
    server = start_retrieval_server(corpus)
    try:
        client = HttpRetrievalClient(server.base_url, api_token="t", timeout_s=5.0)
        assets = retrieve_online(cmd(Method.RETRIEVE, "wood hit"), client)
        assert [a.source_ref for a in assets] == ["s1", "s2"]
        assert len(assets[0].audio) > 0
    finally:
        server.stop()


def test_live_retrieval_adapter_down_server():
    client = HttpRetrievalClient("http://127.0.0.1:9", timeout_s=0.2)
    with pytest.raises(ServiceUnavailable):
        client.search("wood")


# ---------------------------------------------------------------------------
# Generation


def test_generate_mock_deterministic():
    client = MockGenerationClient()
    a = generate_sound(cmd(Method.GENERATE, "metal stomp on glass"), client)
    b = generate_sound(cmd(Method.GENERATE, "metal stomp on glass"), client)
    assert a.asset_id == b.asset_id
    assert a.method is AcqMethod.GENERATED
    assert len(a.audio) == 32000 and a.audio.sample_rate == 16000


def test_generate_live_adapter_500():
    server = start_generation_server(fail_with=500)
    try:
        client = HttpGenerationClient(server.base_url, timeout_s=5.0)
        with pytest.raises(ServiceUnavailable):
            client.generate("thud")
    finally:
        server.stop()


def test_generate_live_adapter_matches_mock_dsp():
    server = start_generation_server()
    try:
        client = HttpGenerationClient(server.base_url, timeout_s=5.0)
        clip = client.generate("metal stomp")
        assert np.array_equal(clip.samples, mock_generated_clip("metal stomp").samples)
    finally:
        server.stop()


# ---------------------------------------------------------------------------
# Transfer


def test_transfer_mock_length_contract_and_determinism():
    client = MockGenerationClient()
    seed = make_asset(AcqMethod.GENERATED, "seed", mock_generated_clip("seed sound"))
    one = transfer_sound(seed, cmd(Method.TRANSFER, "sharper"), client)
    two = transfer_sound(seed, cmd(Method.TRANSFER, "sharper"), client)
    assert len(one.audio) == len(seed.audio)
    assert one.audio.sample_rate == seed.audio.sample_rate
    assert one.asset_id == two.asset_id
    assert one.method is AcqMethod.TRANSFERRED
    assert one.source_ref == seed.asset_id
    assert not one.length_adjusted


@pytest.mark.parametrize("delta", [-500, 500])
def test_transfer_live_adapter_pads_or_truncates(delta):
    server = start_generation_server(transfer_length_error=delta)
    try:
        client = HttpGenerationClient(server.base_url, timeout_s=5.0)
        seed = make_asset(AcqMethod.GENERATED, "seed", mock_generated_clip("seed sound"))
        out = transfer_sound(seed, cmd(Method.TRANSFER, "warmer"), client)
        assert len(out.audio) == len(seed.audio)
        assert out.length_adjusted
    finally:
        server.stop()


def test_transfer_failure_is_service_unavailable():
    seed = make_asset(AcqMethod.GENERATED, "seed", tone_burst(300, 0.2))
    with pytest.raises(ServiceUnavailable):
        transfer_sound(seed, cmd(Method.TRANSFER, "x"), MockGenerationClient(fail=True))


# ---------------------------------------------------------------------------
# Default seeds


def test_default_seed_mapping():
    collide = default_seed_for(EventType.COLLIDE)
    slide = default_seed_for(EventType.SLIDE)
    tap = default_seed_for(EventType.TAP_REAL_WORLD_STRUCTURE)
    assert collide.source_ref == "impact"
    assert slide.source_ref == "slide"
    assert tap.source_ref == "tap"


def test_default_seed_missing_for_show_up():
    with pytest.raises(NoDefault):
        default_seed_for(EventType.SHOW_UP)


# ---------------------------------------------------------------------------
# Candidate bookkeeping


def asset_with(method, tag):
    return make_asset(method, tag, tone_burst(100 + 13 * (hash(tag) % 50), 0.05))


def test_candidate_slot_order_is_rank_not_arrival():
    cs = CandidateSet("evt-0001")
    a0 = asset_with(AcqMethod.RECOMMENDED, "rank0")
    a1 = asset_with(AcqMethod.RECOMMENDED, "rank1")
    cs.insert(AcqMethod.RECOMMENDED, 1, [a1])  # completes first
    cs.insert(AcqMethod.RECOMMENDED, 0, [a0])
    assert [a.asset_id for a in cs.ordered(AcqMethod.RECOMMENDED)] == [a0.asset_id, a1.asset_id]
    assert cs.primary(AcqMethod.RECOMMENDED).asset_id == a0.asset_id
    assert [a.asset_id for a in cs.alternates(AcqMethod.RECOMMENDED)] == [a1.asset_id]


def test_candidate_caps_and_alternates():
    cs = CandidateSet("e")
    assets = [asset_with(AcqMethod.RECOMMENDED, f"r{i}") for i in range(7)]
    for i, a in enumerate(assets):
        cs.insert(AcqMethod.RECOMMENDED, i, [a])
    assert len(cs.ordered(AcqMethod.RECOMMENDED)) == 5
    assert len(cs.alternates(AcqMethod.RECOMMENDED)) == 4


def test_candidate_no_alternates_for_generated():
    cs = CandidateSet("e")
    cs.insert(AcqMethod.GENERATED, 0, [asset_with(AcqMethod.GENERATED, "g0")])
    cs.insert(AcqMethod.GENERATED, 1, [asset_with(AcqMethod.GENERATED, "g1")])
    assert cs.alternates(AcqMethod.GENERATED) == []
    assert len(cs.ordered(AcqMethod.GENERATED)) == 2


def test_content_addressing_over_fixture_corpus(fixture_library):
    # Equal audio <=> equal id across every clip the repo ships.
    from foleysim.acquisition import mock_remote_clip, _load_retrieval_corpus
    from foleysim.audio import clip_to_wav_bytes

    clips = [fixture_library.load_clip(name) for name in fixture_library.filenames()]
    clips += [mock_remote_clip(s.id) for s in _load_retrieval_corpus()]
    ids = [content_id(c) for c in clips]
    by_id = {}
    for clip, asset_id in zip(clips, ids):
        data = clip_to_wav_bytes(clip)
        if asset_id in by_id:
            assert by_id[asset_id] == data
        by_id[asset_id] = data
    # distinct audio must not share ids
    assert len(set(ids)) == len({clip_to_wav_bytes(c) for c in clips})


def test_candidate_dedupes_equal_audio():
    cs = CandidateSet("e")
    a = asset_with(AcqMethod.GENERATED, "same")
    cs.insert(AcqMethod.GENERATED, 0, [a])
    cs.insert(AcqMethod.GENERATED, 1, [a])
    assert len(cs.ordered(AcqMethod.GENERATED)) == 1
