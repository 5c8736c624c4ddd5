"""Chat-completion controller: prompt assembly, command grammar, mock backend.

The controller turns an event description into single-line commands, one per
acquisition method:

    method1recommend:FILENAME
    method2retrieval:PROMPT
    method3generation:PROMPT
    method4transfer:PROMPT

Parsing is deliberately forgiving: lines that do not match the grammar are
collected as diagnostics so one malformed line never voids the good ones.
The mock backend is a pure function of the prompt bundle and is the test
default; the live backend speaks an OpenAI-style chat-completion API.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterable, Optional, Protocol, Sequence

import httpx

from .engine import TRANSFER_EVENT_TYPES
from .errors import EmptyReply, ServiceUnavailable
from .textualize import DISPLAY_TO_EVENT_TYPE, EventText, parse_event_text

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric runs, in order."""
    return _TOKEN_RE.findall(text.lower())


def overlap_score(query_tokens: set[str], text: str) -> int:
    """Number of distinct query tokens appearing in the text."""
    return len(query_tokens & set(tokenize(text)))


def _load_stopwords() -> frozenset[str]:
    raw = resources.files("foleysim.data").joinpath("stopwords.txt").read_text(encoding="utf-8")
    return frozenset(
        line.strip() for line in raw.splitlines() if line.strip() and not line.startswith("#")
    )


STOPWORDS = _load_stopwords()
PROMPT_TOKEN_LIMIT = 8


def condense_prompt(text: str) -> str:
    """First distinct content tokens of the text, joined by spaces."""
    seen: list[str] = []
    for tok in tokenize(text):
        if tok in STOPWORDS or tok in seen:
            continue
        seen.append(tok)
        if len(seen) == PROMPT_TOKEN_LIMIT:
            break
    if not seen:  # all-stopword or empty text still needs a usable prompt
        for tok in tokenize(text):
            if tok not in seen:
                seen.append(tok)
            if len(seen) == PROMPT_TOKEN_LIMIT:
                break
    return " ".join(seen) if seen else "sound"


class Method(Enum):
    RECOMMEND = "method1recommend"
    RETRIEVE = "method2retrieval"
    GENERATE = "method3generation"
    TRANSFER = "method4transfer"

    @property
    def prefix(self) -> str:
        return self.value + ":"


@dataclass(frozen=True)
class ControllerCommand:
    method: Method
    payload: str
    raw_line: str = ""

    def __post_init__(self) -> None:
        if not self.payload or len(self.payload.splitlines()) != 1:
            raise ValueError("command payload must be non-empty and single-line")

    def format(self) -> str:
        return f"{self.method.value}:{self.payload}"


def recommend(filename: str) -> ControllerCommand:
    return ControllerCommand(Method.RECOMMEND, filename)


def retrieve(prompt: str) -> ControllerCommand:
    return ControllerCommand(Method.RETRIEVE, prompt)


def generate(prompt: str) -> ControllerCommand:
    return ControllerCommand(Method.GENERATE, prompt)


def transfer(prompt: str) -> ControllerCommand:
    return ControllerCommand(Method.TRANSFER, prompt)


@dataclass(frozen=True)
class ParsedReply:
    commands: tuple[ControllerCommand, ...]
    diagnostics: tuple[str, ...] = ()


def parse_commands(raw_reply: str) -> ParsedReply:
    """Parse a backend reply into commands plus diagnostics.

    A zero-length reply raises EmptyReply; a non-empty reply with no
    parseable command is not an error and yields an empty command list.
    """
    if raw_reply == "":
        raise EmptyReply("controller returned an empty reply")
    commands: list[ControllerCommand] = []
    diagnostics: list[str] = []
    for line in raw_reply.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        lowered = stripped.lower()
        for method in Method:
            if lowered.startswith(method.prefix):
                payload = stripped[len(method.prefix):].strip()
                if payload:
                    commands.append(ControllerCommand(method, payload, raw_line=line))
                else:
                    diagnostics.append(line)
                break
        else:
            diagnostics.append(line)
    return ParsedReply(commands=tuple(commands), diagnostics=tuple(diagnostics))


def format_commands(commands: Iterable[ControllerCommand]) -> str:
    return "\n".join(c.format() for c in commands)


# --------------------------------------------------------------------------
# Prompt assembly

_LIBRARY_MARKER = "Library files:"

_INSTRUCTIONS = """\
You orchestrate sound acquisition for events in an interactive 3D session.
Given the event description, reply with one command per line and nothing
else, using exactly these formats:
method1recommend:FILENAME
method2retrieval:PROMPT
method3generation:PROMPT
method4transfer:PROMPT
Use method1recommend (at most five lines, best match first) only with
filenames copied verbatim from the library list below. Use method2retrieval
and method3generation with a short descriptive prompt condensed from the
event. Use method4transfer only for tap, slide, and collide events, with a
prompt describing how the default clip should sound.
"""

_EMPTY_LIBRARY_NOTE = """\
The local library is empty: do not emit method1recommend lines; rely on
retrieval and generation instead.
"""


@dataclass(frozen=True)
class BackendOptions:
    model: str = "mock-controller"
    temperature: float = 0.0
    timeout_s: float = 30.0


@dataclass(frozen=True)
class PromptBundle:
    system_context: str
    user_message: str
    options: BackendOptions = field(default_factory=BackendOptions)


def build_controller_request(
    text: EventText | str,
    library: object = (),
    options: Optional[BackendOptions] = None,
) -> PromptBundle:
    """Assemble the controller request for one event description.

    ``library`` is a LibraryIndex or any iterable of filename strings; the
    full filename list is embedded in the system context.
    """
    names = getattr(library, "filenames", None)
    filenames: Sequence[str] = list(names() if callable(names) else names or library)  # type: ignore[arg-type]
    if filenames:
        block = _LIBRARY_MARKER + "\n" + "\n".join(f"- {n}" for n in filenames)
        system_context = _INSTRUCTIONS + block
    else:
        system_context = _INSTRUCTIONS + _EMPTY_LIBRARY_NOTE
    message = text.text if isinstance(text, EventText) else text
    return PromptBundle(
        system_context=system_context,
        user_message=message,
        options=options or BackendOptions(),
    )


def extract_library_filenames(system_context: str) -> list[str]:
    lines = system_context.splitlines()
    try:
        start = lines.index(_LIBRARY_MARKER) + 1
    except ValueError:
        return []
    names = []
    for line in lines[start:]:
        if not line.startswith("- "):
            break
        names.append(line[2:])
    return names


# --------------------------------------------------------------------------
# Backends


def mock_controller(bundle: PromptBundle) -> str:
    """Deterministic stand-in for the live model; pure function of the bundle.

    Recommends the top-5 library files by token overlap with the event text
    (ties lexicographic, zero scores excluded), condenses the text into a
    retrieval and a generation prompt, and adds a transfer line for tap,
    slide, and collide events.
    """
    text = bundle.user_message
    query = set(tokenize(text))
    scored = [
        (overlap_score(query, name), name)
        for name in extract_library_filenames(bundle.system_context)
    ]
    ranked = sorted(((s, n) for s, n in scored if s > 0), key=lambda sn: (-sn[0], sn[1]))
    lines = [f"{Method.RECOMMEND.value}:{name}" for _, name in ranked[:5]]
    prompt = condense_prompt(text)
    lines.append(f"{Method.RETRIEVE.value}:{prompt}")
    lines.append(f"{Method.GENERATE.value}:{prompt}")
    try:
        display, _, _ = parse_event_text(text)
        event_type = DISPLAY_TO_EVENT_TYPE[display]
    except ValueError:
        event_type = None
    if event_type in TRANSFER_EVENT_TYPES:
        lines.append(f"{Method.TRANSFER.value}:{prompt}")
    return "\n".join(lines)


class ChatBackend(Protocol):
    def complete(self, bundle: PromptBundle) -> str: ...


class MockChatBackend:
    """In-process mock; optional latency and failure injection for tests."""

    def __init__(self, latency_s: float = 0.0, fail: bool = False) -> None:
        self.latency_s = latency_s
        self.fail = fail

    def complete(self, bundle: PromptBundle) -> str:
        if self.latency_s > 0:
            import time

            time.sleep(self.latency_s)
        if self.fail:
            raise ServiceUnavailable("mock controller backend forced failure")
        return mock_controller(bundle)


class HttpChatBackend:
    """OpenAI-compatible chat-completion client with one retry on transport
    errors. Endpoint and key come from config (env override for the key)."""

    def __init__(self, endpoint: str, api_key: str = "", client: Optional[httpx.Client] = None) -> None:
        self.endpoint = endpoint
        self.api_key = api_key
        self._client = client or httpx.Client()

    def complete(self, bundle: PromptBundle) -> str:
        payload = {
            "model": bundle.options.model,
            "temperature": bundle.options.temperature,
            "messages": [
                {"role": "system", "content": bundle.system_context},
                {"role": "user", "content": bundle.user_message},
            ],
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for _ in range(2):
            try:
                response = self._client.post(
                    self.endpoint, json=payload, headers=headers, timeout=bundle.options.timeout_s
                )
            except httpx.TransportError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = ServiceUnavailable(f"controller backend HTTP {response.status_code}")
                continue
            if response.status_code != 200:
                raise ServiceUnavailable(f"controller backend HTTP {response.status_code}")
            try:
                return response.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise ServiceUnavailable(f"controller backend malformed response: {exc}") from exc
        raise ServiceUnavailable(f"controller backend unreachable: {last_error}")
