import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foleysim.controller import (
    ControllerCommand,
    Method,
    MockChatBackend,
    PromptBundle,
    build_controller_request,
    condense_prompt,
    extract_library_filenames,
    format_commands,
    mock_controller,
    parse_commands,
    tokenize,
)
from foleysim.errors import EmptyReply
from tests.conftest import SMALL_LIBRARY_NAMES

ROBOT_COLLIDE_TEXT = (
    "This event is Collide, caused by toy robot. "
    "This event casts on a wood plane. "
    "This model is a toy robot made of metal. The surface is wood."
)
SHOW_UP_TEXT = (
    "This event is Show Up, caused by toy robot. "
    "This model is a toy robot made of metal."
)


# ---------------------------------------------------------------------------
# Parsing


def test_parse_recommend_line():
    parsed = parse_commands("method1recommend:Crash Aluminum Tray Bang")
    assert [c.method for c in parsed.commands] == [Method.RECOMMEND]
    assert parsed.commands[0].payload == "Crash Aluminum Tray Bang"
    assert parsed.diagnostics == ()


def test_parse_preserves_order():
    parsed = parse_commands(
        "method2retrieval:metal footsteps on glass\n"
        "method3generation:metal robot stomp on glass"
    )
    assert [c.method for c in parsed.commands] == [Method.RETRIEVE, Method.GENERATE]
    assert [c.payload for c in parsed.commands] == [
        "metal footsteps on glass",
        "metal robot stomp on glass",
    ]


def test_parse_chatter_becomes_diagnostics():
    parsed = parse_commands("sure! here are sounds:")
    assert parsed.commands == ()
    assert parsed.diagnostics == ("sure! here are sounds:",)


def test_parse_case_insensitive_prefix_and_trimming():
    parsed = parse_commands("  METHOD1RECOMMEND:  Wood Knock  ")
    assert parsed.commands[0].payload == "Wood Knock"


def test_parse_empty_payload_is_diagnostic():
    parsed = parse_commands("method3generation:   ")
    assert parsed.commands == ()
    assert len(parsed.diagnostics) == 1


def test_parse_transfer_keyword():
    parsed = parse_commands("method4transfer:sharper metallic ring")
    assert parsed.commands[0].method == Method.TRANSFER


def test_zero_length_reply_is_error():
    with pytest.raises(EmptyReply):
        parse_commands("")


def test_mixed_reply_keeps_good_lines():
    parsed = parse_commands(
        "Here you go:\nmethod1recommend:Wood Knock\nnote: enjoy\nmethod3generation:thud"
    )
    assert [c.payload for c in parsed.commands] == ["Wood Knock", "thud"]
    assert len(parsed.diagnostics) == 2


# Blacklist every character str.splitlines treats as a line boundary: the
# command grammar is strictly single-line.
_LINE_BOUNDARIES = "\n\r\x0b\x0c\x1c\x1d\x1e\x85  "
_payloads = st.text(
    alphabet=st.characters(blacklist_characters=_LINE_BOUNDARIES, blacklist_categories=("Cs",)),
    min_size=1,
    max_size=40,
).map(str.strip).filter(bool)


@given(st.lists(st.tuples(st.sampled_from(list(Method)), _payloads), min_size=0, max_size=10))
@settings(max_examples=150, deadline=None)
def test_format_parse_round_trip(pairs):
    commands = [ControllerCommand(m, p) for m, p in pairs]
    parsed = parse_commands(format_commands(commands)) if commands else None
    if commands:
        assert [(c.method, c.payload) for c in parsed.commands] == pairs
        assert parsed.diagnostics == ()


@given(st.binary(max_size=64))
@settings(max_examples=200, deadline=None)
def test_parser_survives_arbitrary_bytes(data):
    text = data.decode("latin-1")
    if text == "":
        return
    parsed = parse_commands(text)
    assert isinstance(parsed.commands, tuple)


# ---------------------------------------------------------------------------
# Prompt assembly


def test_bundle_embeds_all_library_filenames(small_library):
    bundle = build_controller_request(ROBOT_COLLIDE_TEXT, small_library)
    for name in SMALL_LIBRARY_NAMES:
        assert name in bundle.system_context
    assert extract_library_filenames(bundle.system_context) == small_library.filenames()


def test_empty_library_instructs_retrieval_and_generation_only():
    bundle = build_controller_request(ROBOT_COLLIDE_TEXT, [])
    assert "library is empty" in bundle.system_context
    assert extract_library_filenames(bundle.system_context) == []


def test_user_message_is_verbatim(small_library):
    bundle = build_controller_request(ROBOT_COLLIDE_TEXT, small_library)
    assert bundle.user_message == ROBOT_COLLIDE_TEXT


# ---------------------------------------------------------------------------
# Mock controller


def bundle_for(text, names=SMALL_LIBRARY_NAMES):
    return build_controller_request(text, list(names))


def test_mock_ranks_by_token_overlap():
    # Oracle by hand: only "Footsteps Wood Creak" shares a token ("wood");
    # the other two score zero and are excluded.
    query = set(tokenize(ROBOT_COLLIDE_TEXT))
    scores = {n: len(query & set(tokenize(n))) for n in SMALL_LIBRARY_NAMES}
    assert scores == {
        "Crash Aluminum Tray Bang": 0,
        "Footsteps Wood Creak": 1,
        "Liquid Mud Suction": 0,
    }
    reply = mock_controller(bundle_for(ROBOT_COLLIDE_TEXT))
    rec_lines = [l for l in reply.splitlines() if l.startswith("method1recommend:")]
    assert rec_lines == ["method1recommend:Footsteps Wood Creak"]


def test_mock_orders_ties_lexicographically():
    names = ["Banana Wood Thump", "Apple Wood Thump", "Cherry Wood Metal Hit"]
    reply = mock_controller(bundle_for(ROBOT_COLLIDE_TEXT, names))
    rec = [l.split(":", 1)[1] for l in reply.splitlines() if l.startswith("method1recommend:")]
    # "Cherry Wood Metal Hit" scores 2 (wood+metal); the others score 1 and tie.
    assert rec == ["Cherry Wood Metal Hit", "Apple Wood Thump", "Banana Wood Thump"]


def test_mock_caps_recommendations_at_five():
    names = [f"Wood Variant {i}" for i in range(8)]
    reply = mock_controller(bundle_for(ROBOT_COLLIDE_TEXT, names))
    rec = [l for l in reply.splitlines() if l.startswith("method1recommend:")]
    assert len(rec) == 5


def test_mock_condensed_prompt_frozen_value():
    # First 8 distinct content tokens of the collide text.
    assert condense_prompt(ROBOT_COLLIDE_TEXT) == (
        "collide toy robot wood plane model made metal"
    )


def test_mock_transfer_line_only_for_contact_events():
    collide_reply = mock_controller(bundle_for(ROBOT_COLLIDE_TEXT))
    assert any(l.startswith("method4transfer:") for l in collide_reply.splitlines())
    show_reply = mock_controller(bundle_for(SHOW_UP_TEXT))
    assert not any(l.startswith("method4transfer:") for l in show_reply.splitlines())


def test_mock_reply_is_deterministic_and_clean():
    b = bundle_for(ROBOT_COLLIDE_TEXT)
    first = mock_controller(b)
    second = mock_controller(b)
    assert first == second
    parsed = parse_commands(first)
    assert parsed.diagnostics == ()
    assert len(parsed.commands) >= 3


def test_mock_backend_failure_injection():
    backend = MockChatBackend(fail=True)
    with pytest.raises(Exception):
        backend.complete(bundle_for(ROBOT_COLLIDE_TEXT))


@given(st.text(max_size=200))
@settings(max_examples=60, deadline=None)
def test_mock_reply_always_parses_cleanly(text):
    reply = mock_controller(PromptBundle(system_context="x", user_message=text))
    parsed = parse_commands(reply)
    assert parsed.diagnostics == ()
    assert len(parsed.commands) >= 2  # retrieval + generation always present


# ---------------------------------------------------------------------------
# Live backend adapter


def test_http_backend_against_stub(monkeypatch):
    import httpx

    def handler(request: httpx.Request) -> httpx.Response:
        assert request.headers["Authorization"] == "Bearer sekret"
        body = request.read().decode()
        assert "messages" in body
        return httpx.Response(
            200,
            json={"choices": [{"message": {"content": "method3generation:thud"}}]},
        )

    from foleysim.controller import HttpChatBackend

    client = httpx.Client(transport=httpx.MockTransport(handler))
    backend = HttpChatBackend("http://chat.test/v1/chat/completions", "sekret", client=client)
    reply = backend.complete(bundle_for(ROBOT_COLLIDE_TEXT))
    assert reply == "method3generation:thud"


def test_http_backend_5xx_raises_service_unavailable():
    import httpx

    from foleysim.controller import HttpChatBackend
    from foleysim.errors import ServiceUnavailable

    client = httpx.Client(
        transport=httpx.MockTransport(lambda request: httpx.Response(500, text="boom"))
    )
    backend = HttpChatBackend("http://chat.test/none", client=client)
    with pytest.raises(ServiceUnavailable):
        backend.complete(bundle_for(ROBOT_COLLIDE_TEXT))
