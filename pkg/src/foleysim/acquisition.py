"""The four sound-acquisition methods behind pluggable service clients.

Local recommendation resolves controller-picked filenames against the WAV
library; online retrieval queries a FreeSound-style service and re-ranks by
token overlap; generation and transfer call a text-to-audio service. Each
method can fail independently: failures surface as typed errors that the
session folds into per-job state, never aborting sibling methods.

Mock clients are deterministic and support latency/failure injection; live
clients are thin httpx adapters with a single retry. The transfer contract
is hard: output sample count and rate always match the seed clip, enforced
by pad/truncate on live backends and recorded on the asset when it happens.
"""

from __future__ import annotations

import base64
import json
import time
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Protocol

import httpx
import numpy as np

from .audio import (
    AudioClip,
    clip_from_wav_bytes,
    clip_to_wav_bytes,
    content_id,
    fnv1a64,
    mock_generated_clip,
    mock_transferred_clip,
    read_wav,
    tone_burst,
)
from .controller import ControllerCommand, overlap_score, tokenize
from .engine import TRANSFER_EVENT_TYPES, EventType
from .errors import (
    EmptyResults,
    NoDefault,
    ServiceUnavailable,
    UnknownFilename,
    ValidationError,
)


class AcqMethod(Enum):
    RECOMMENDED = "recommended"
    RETRIEVED = "retrieved"
    GENERATED = "generated"
    TRANSFERRED = "transferred"


RANKED_METHODS = (AcqMethod.RECOMMENDED, AcqMethod.RETRIEVED)
TOP_K = 5


@dataclass(frozen=True)
class SoundAsset:
    """An audio clip plus provenance. ``asset_id`` is the audio content hash."""

    asset_id: str
    method: AcqMethod
    prompt_or_query: str
    audio: AudioClip
    source_ref: Optional[str] = None
    created_at: float = 0.0
    length_adjusted: bool = False

    def __post_init__(self) -> None:
        if self.method is AcqMethod.TRANSFERRED and not self.source_ref:
            raise ValidationError("transferred assets must carry their parent asset id")

    def meta(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "method": self.method.value,
            "prompt_or_query": self.prompt_or_query,
            "source_ref": self.source_ref,
            "created_at": self.created_at,
            "length_adjusted": self.length_adjusted,
            "sample_rate": self.audio.sample_rate,
            "n_samples": len(self.audio),
        }


def make_asset(
    method: AcqMethod,
    prompt_or_query: str,
    audio: AudioClip,
    source_ref: Optional[str] = None,
    created_at: float = 0.0,
    length_adjusted: bool = False,
) -> SoundAsset:
    return SoundAsset(
        asset_id=content_id(audio),
        method=method,
        prompt_or_query=prompt_or_query,
        audio=audio,
        source_ref=source_ref,
        created_at=created_at,
        length_adjusted=length_adjusted,
    )


# --------------------------------------------------------------------------
# Local library


class LibraryIndex:
    """Descriptive-filename WAV library; filename sans extension is the label."""

    def __init__(self, entries: list[tuple[str, Path]]):
        names = [n for n, _ in entries]
        if len(set(names)) != len(names):
            raise ValidationError("library filenames must be unique")
        self.entries = list(entries)
        self._by_name = {n: p for n, p in entries}

    @staticmethod
    def from_dir(path: str | Path) -> "LibraryIndex":
        root = Path(path)
        entries = []
        for wav in sorted(root.glob("*.wav")):
            with open(wav, "rb"):
                pass  # every path must be readable at load
            entries.append((wav.stem, wav))
        return LibraryIndex(entries)

    @staticmethod
    def empty() -> "LibraryIndex":
        return LibraryIndex([])

    def filenames(self) -> list[str]:
        return [n for n, _ in self.entries]

    def resolve(self, filename: str) -> str:
        """Exact match, else a unique case-insensitive match; else unknown."""
        if filename in self._by_name:
            return filename
        folded = [n for n in self._by_name if n.lower() == filename.lower()]
        if len(folded) == 1:
            return folded[0]
        raise UnknownFilename(f"library has no file named {filename!r}")

    def load_clip(self, filename: str) -> AudioClip:
        return read_wav(self._by_name[self.resolve(filename)])

    def __len__(self) -> int:
        return len(self.entries)


def recommend_local(cmd: ControllerCommand, library: LibraryIndex, created_at: float = 0.0) -> SoundAsset:
    """Resolve a recommended filename to a library asset.

    Hallucinated filenames raise UnknownFilename; the caller records that as
    a per-method failure and the event keeps its other methods.
    """
    name = library.resolve(cmd.payload)
    return make_asset(
        AcqMethod.RECOMMENDED,
        prompt_or_query=cmd.payload,
        audio=library.load_clip(name),
        source_ref=name,
        created_at=created_at,
    )


# --------------------------------------------------------------------------
# Online retrieval


@dataclass(frozen=True)
class RemoteSound:
    id: str
    name: str
    description: str
    preview_url: str = ""


class RetrievalClient(Protocol):
    def search(self, query: str) -> list[RemoteSound]: ...

    def download(self, sound: RemoteSound) -> AudioClip: ...


def _load_retrieval_corpus() -> list[RemoteSound]:
    raw = resources.files("foleysim.data").joinpath("retrieval_corpus.json").read_text("utf-8")
    return [RemoteSound(**entry) for entry in json.loads(raw)]


def mock_remote_clip(sound_id: str) -> AudioClip:
    """Deterministic preview audio for a corpus entry, keyed by its id."""
    h = fnv1a64(sound_id)
    freq = 120.0 + (h % 2000)
    seconds = 0.5 + (h >> 16) % 100 / 100.0
    return tone_burst(freq, seconds, decay_s=0.2)


class MockRetrievalClient:
    """Serves the packaged fixture corpus; latency/failure injectable."""

    def __init__(
        self,
        corpus: Optional[list[RemoteSound]] = None,
        latency_s: float = 0.0,
        fail: bool = False,
    ) -> None:
        self.corpus = corpus if corpus is not None else _load_retrieval_corpus()
        self.latency_s = latency_s
        self.fail = fail

    def _gate(self) -> None:
        if self.latency_s > 0:
            time.sleep(self.latency_s)
        if self.fail:
            raise ServiceUnavailable("mock retrieval service forced failure")

    def search(self, query: str) -> list[RemoteSound]:
        self._gate()
        return list(self.corpus)

    def download(self, sound: RemoteSound) -> AudioClip:
        self._gate()
        return mock_remote_clip(sound.id)


class HttpRetrievalClient:
    """FreeSound-style adapter: GET text search, then download previews."""

    def __init__(
        self,
        endpoint: str,
        api_token: str = "",
        timeout_s: float = 20.0,
        client: Optional[httpx.Client] = None,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.api_token = api_token
        self.timeout_s = timeout_s
        self._client = client or httpx.Client()

    def _get(self, url: str, params: Optional[dict] = None) -> httpx.Response:
        last: Exception | None = None
        for _ in range(2):
            try:
                response = self._client.get(url, params=params, timeout=self.timeout_s)
            except httpx.TransportError as exc:
                last = exc
                continue
            if response.status_code >= 500:
                last = ServiceUnavailable(f"retrieval service HTTP {response.status_code}")
                continue
            if response.status_code != 200:
                raise ServiceUnavailable(f"retrieval service HTTP {response.status_code}")
            return response
        raise ServiceUnavailable(f"retrieval service unreachable: {last}")

    def search(self, query: str) -> list[RemoteSound]:
        response = self._get(
            f"{self.endpoint}/search/text",
            params={"query": query, "token": self.api_token},
        )
        try:
            results = response.json()["results"]
            return [
                RemoteSound(
                    id=str(r["id"]),
                    name=r.get("name", ""),
                    description=r.get("description", ""),
                    preview_url=r.get("preview", ""),
                )
                for r in results
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceUnavailable(f"retrieval service malformed response: {exc}") from exc

    def download(self, sound: RemoteSound) -> AudioClip:
        response = self._get(sound.preview_url)
        return clip_from_wav_bytes(response.content)


def retrieve_online(
    cmd: ControllerCommand, client: RetrievalClient, created_at: float = 0.0
) -> list[SoundAsset]:
    """Search, re-rank by description token overlap, download the top five.

    The first asset is the primary candidate; the rest are alternates.
    Raises EmptyResults when nothing overlaps the prompt at all.
    """
    prompt = cmd.payload
    results = client.search(prompt)
    query = set(tokenize(prompt))
    scored = [(overlap_score(query, r.description), r) for r in results]
    ranked = sorted(
        ((s, r) for s, r in scored if s > 0), key=lambda sr: (-sr[0], sr[1].name, sr[1].id)
    )
    if not ranked:
        raise EmptyResults(f"no retrieval results overlap prompt {prompt!r}")
    assets = []
    for _, sound in ranked[:TOP_K]:
        assets.append(
            make_asset(
                AcqMethod.RETRIEVED,
                prompt_or_query=prompt,
                audio=client.download(sound),
                source_ref=sound.id,
                created_at=created_at,
            )
        )
    return assets


# --------------------------------------------------------------------------
# Generation and transfer


class GenerationClient(Protocol):
    def generate(self, prompt: str) -> AudioClip: ...

    def transfer(self, prompt: str, seed: AudioClip) -> AudioClip: ...


class MockGenerationClient:
    def __init__(self, latency_s: float = 0.0, fail: bool = False) -> None:
        self.latency_s = latency_s
        self.fail = fail

    def _gate(self) -> None:
        if self.latency_s > 0:
            time.sleep(self.latency_s)
        if self.fail:
            raise ServiceUnavailable("mock generation service forced failure")

    def generate(self, prompt: str) -> AudioClip:
        self._gate()
        return mock_generated_clip(prompt)

    def transfer(self, prompt: str, seed: AudioClip) -> AudioClip:
        self._gate()
        return mock_transferred_clip(seed, prompt)


class HttpGenerationClient:
    """POST {prompt, mode, seed_wav} -> WAV bytes."""

    def __init__(
        self, endpoint: str, timeout_s: float = 60.0, client: Optional[httpx.Client] = None
    ) -> None:
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self._client = client or httpx.Client()

    def _post(self, payload: dict) -> AudioClip:
        last: Exception | None = None
        for _ in range(2):
            try:
                response = self._client.post(self.endpoint, json=payload, timeout=self.timeout_s)
            except httpx.TransportError as exc:
                last = exc
                continue
            if response.status_code >= 500:
                last = ServiceUnavailable(f"generation service HTTP {response.status_code}")
                continue
            if response.status_code != 200:
                raise ServiceUnavailable(f"generation service HTTP {response.status_code}")
            return clip_from_wav_bytes(response.content)
        raise ServiceUnavailable(f"generation service unreachable: {last}")

    def generate(self, prompt: str) -> AudioClip:
        return self._post({"prompt": prompt, "mode": "generate"})

    def transfer(self, prompt: str, seed: AudioClip) -> AudioClip:
        seed_b64 = base64.b64encode(clip_to_wav_bytes(seed)).decode("ascii")
        return self._post({"prompt": prompt, "mode": "transfer", "seed_wav": seed_b64})


def generate_sound(
    cmd: ControllerCommand, client: GenerationClient, created_at: float = 0.0
) -> SoundAsset:
    clip = client.generate(cmd.payload)
    return make_asset(
        AcqMethod.GENERATED, prompt_or_query=cmd.payload, audio=clip, created_at=created_at
    )


def transfer_sound(
    seed_asset: SoundAsset,
    cmd: ControllerCommand,
    client: GenerationClient,
    created_at: float = 0.0,
) -> SoundAsset:
    """Restyle the seed clip; output length and rate always match the seed.

    A live backend that returns a different sample count (or rate) is
    corrected by truncating or zero-padding, and the correction is recorded
    on the asset.
    """
    out = client.transfer(cmd.payload, seed_asset.audio)
    adjusted = False
    samples = out.samples
    want = len(seed_asset.audio)
    if out.sample_rate != seed_asset.audio.sample_rate:
        adjusted = True
    if len(samples) != want:
        adjusted = True
        if len(samples) > want:
            samples = samples[:want]
        else:
            samples = np.concatenate([samples, np.zeros(want - len(samples), dtype=samples.dtype)])
    clip = AudioClip(seed_asset.audio.sample_rate, samples)
    return make_asset(
        AcqMethod.TRANSFERRED,
        prompt_or_query=cmd.payload,
        audio=clip,
        source_ref=seed_asset.asset_id,
        created_at=created_at,
        length_adjusted=adjusted,
    )


# --------------------------------------------------------------------------
# Default transfer seeds

_SEED_FILES = {
    EventType.TAP_REAL_WORLD_STRUCTURE: "tap.wav",
    EventType.SLIDE: "slide.wav",
    EventType.COLLIDE: "impact.wav",
}


def packaged_seed_paths() -> dict[str, str]:
    base = resources.files("foleysim.data").joinpath("seeds")
    return {et.value: str(base.joinpath(name)) for et, name in _SEED_FILES.items()}


def default_seed_for(
    event_type: EventType,
    seeds: Optional[dict[str, str]] = None,
    created_at: float = 0.0,
) -> SoundAsset:
    """The configured neutral seed clip for a transfer-eligible event type.

    ``seeds`` maps event-type wire names to WAV paths; defaults to the
    packaged tap/slide/impact clips.
    """
    if event_type not in TRANSFER_EVENT_TYPES:
        raise NoDefault(f"no default transfer seed for event type {event_type.value}")
    paths = seeds or packaged_seed_paths()
    path = paths.get(event_type.value)
    if not path:
        raise NoDefault(f"no seed configured for event type {event_type.value}")
    clip = read_wav(path)
    return make_asset(
        AcqMethod.RECOMMENDED,
        prompt_or_query=f"default {event_type.value} seed",
        audio=clip,
        source_ref=Path(path).stem,
        created_at=created_at,
    )


# --------------------------------------------------------------------------
# Candidate bookkeeping


@dataclass
class CandidateSet:
    """Per-event candidates grouped by method, in deterministic rank order.

    The primary candidate of a method is rank 0; ranks 1..4 of the
    recommendation and retrieval methods are the browsable alternates.
    Insertion is slot-addressed so concurrent job completion order never
    changes the stored order. Equal-audio duplicates collapse.
    """

    event_id: str
    slots: dict[AcqMethod, dict[int, list[SoundAsset]]] = field(default_factory=dict)

    def insert(self, method: AcqMethod, rank: int, assets: list[SoundAsset]) -> None:
        self.slots.setdefault(method, {})[rank] = list(assets)

    def ordered(self, method: AcqMethod) -> list[SoundAsset]:
        by_rank = self.slots.get(method, {})
        out: list[SoundAsset] = []
        seen: set[str] = set()
        for rank in sorted(by_rank):
            for asset in by_rank[rank]:
                if asset.asset_id in seen:
                    continue
                seen.add(asset.asset_id)
                out.append(asset)
        if method in RANKED_METHODS:
            return out[:TOP_K]
        return out

    def primary(self, method: AcqMethod) -> Optional[SoundAsset]:
        ordered = self.ordered(method)
        return ordered[0] if ordered else None

    def alternates(self, method: AcqMethod) -> list[SoundAsset]:
        if method not in RANKED_METHODS:
            return []
        return self.ordered(method)[1:]

    def all_assets(self) -> list[SoundAsset]:
        out = []
        for method in AcqMethod:
            out.extend(self.ordered(method))
        return out

    def asset_ids(self) -> set[str]:
        return {a.asset_id for a in self.all_assets()}

    def methods_present(self) -> list[AcqMethod]:
        return [m for m in AcqMethod if self.ordered(m)]
