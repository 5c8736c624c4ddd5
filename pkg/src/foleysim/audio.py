"""Audio clips, WAV serialization, content hashing, and the mock DSP.

All audio at rest is RIFF/WAV, PCM 16-bit little-endian, mono. Asset ids are
the SHA-256 of a clip's canonical WAV bytes, so equal audio means equal id.

The mock generation and transfer backends are small deterministic DSP
routines: generation sums three exponentially decaying sine partials whose
frequencies derive from an FNV-1a hash of the prompt; transfer applies a
prompt-keyed one-pole low-pass and re-normalizes to the input peak. They
exist to make the whole pipeline testable end to end with audible, distinct
outputs.
"""

from __future__ import annotations

import hashlib
import io
import math
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidAudio

ALLOWED_SAMPLE_RATES = (16000, 44100, 48000)

MOCK_GENERATION_RATE = 16000
MOCK_GENERATION_SECONDS = 2.0
MOCK_DECAY_SECONDS = 0.4
MOCK_PEAK = 0.8


@dataclass(frozen=True)
class AudioClip:
    """Mono 16-bit PCM audio."""

    sample_rate: int
    samples: np.ndarray

    def __post_init__(self) -> None:
        if self.sample_rate not in ALLOWED_SAMPLE_RATES:
            raise InvalidAudio(f"sample rate {self.sample_rate} not in {ALLOWED_SAMPLE_RATES}")
        arr = np.asarray(self.samples, dtype=np.int16)
        if arr.ndim != 1 or arr.size == 0:
            raise InvalidAudio("samples must be a non-empty 1-D int16 array")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


def clip_to_wav_bytes(clip: AudioClip) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(clip.sample_rate)
        fh.writeframes(clip.samples.astype("<i2").tobytes())
    return buf.getvalue()


def clip_from_wav_bytes(data: bytes) -> AudioClip:
    try:
        with wave.open(io.BytesIO(data), "rb") as fh:
            channels = fh.getnchannels()
            width = fh.getsampwidth()
            rate = fh.getframerate()
            frames = fh.readframes(fh.getnframes())
    except (wave.Error, EOFError) as exc:
        raise InvalidAudio(f"not a decodable WAV stream: {exc}") from exc
    if channels != 1:
        raise InvalidAudio(f"expected mono audio, got {channels} channels")
    if width != 2:
        raise InvalidAudio(f"expected 16-bit PCM, got {width * 8}-bit")
    samples = np.frombuffer(frames, dtype="<i2")
    return AudioClip(sample_rate=rate, samples=samples)


def read_wav(path: str | Path) -> AudioClip:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise InvalidAudio(f"cannot read {path}: {exc}") from exc
    return clip_from_wav_bytes(data)


def write_wav(path: str | Path, clip: AudioClip) -> None:
    Path(path).write_bytes(clip_to_wav_bytes(clip))


def content_id(clip: AudioClip) -> str:
    """Content address: SHA-256 hex of the canonical WAV serialization."""
    return hashlib.sha256(clip_to_wav_bytes(clip)).hexdigest()


# --------------------------------------------------------------------------
# Prompt hashing

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a over the UTF-8 bytes of the text."""
    h = FNV64_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * FNV64_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


# --------------------------------------------------------------------------
# Mock DSP


def _to_int16_peak(x: np.ndarray, peak: float) -> np.ndarray:
    top = float(np.max(np.abs(x)))
    if top == 0.0:
        return np.zeros(len(x), dtype=np.int16)
    scaled = x * (peak / top)
    return np.round(scaled).astype(np.int16)


def mock_generated_clip(prompt: str) -> AudioClip:
    """2.0 s, 16 kHz mono: three decaying sine partials keyed by the prompt.

    Partial i uses frequency 100 + (seed byte i mod 1900) Hz, where the seed
    bytes are the big-endian bytes of the 64-bit FNV-1a prompt hash; each
    partial decays with a 0.4 s time constant and the sum is peak-normalized
    to 0.8 of full scale. Bit-exact given the prompt.
    """
    seed_bytes = fnv1a64(prompt).to_bytes(8, "big")
    n = int(MOCK_GENERATION_SECONDS * MOCK_GENERATION_RATE)
    t = np.arange(n, dtype=np.float64) / MOCK_GENERATION_RATE
    envelope = np.exp(-t / MOCK_DECAY_SECONDS)
    x = np.zeros(n, dtype=np.float64)
    for i in range(3):
        freq = 100.0 + (seed_bytes[i] % 1900)
        x += np.sin(2.0 * math.pi * freq * t) * envelope
    return AudioClip(MOCK_GENERATION_RATE, _to_int16_peak(x, MOCK_PEAK * 32767.0))


def mock_transferred_clip(seed: AudioClip, prompt: str) -> AudioClip:
    """One-pole low-pass keyed by the prompt, re-normalized to the input peak.

    Output sample count and sample rate always equal the input's.
    """
    cutoff = 500.0 + (fnv1a64(prompt) % 5500)
    alpha = 1.0 - math.exp(-2.0 * math.pi * cutoff / seed.sample_rate)
    x = seed.samples.astype(np.float64)
    # y[n] = y[n-1] + alpha * (x[n] - y[n-1]), zero initial state
    y = lfilter([alpha], [1.0, alpha - 1.0], x)
    in_peak = float(np.max(np.abs(x)))
    return AudioClip(seed.sample_rate, _to_int16_peak(y, in_peak))


# --------------------------------------------------------------------------
# Fixture synthesis (library files and default transfer seeds)


def tone_burst(
    freq: float,
    seconds: float,
    sample_rate: int = MOCK_GENERATION_RATE,
    decay_s: float = 0.1,
    peak: float = 0.7,
) -> AudioClip:
    n = max(1, int(seconds * sample_rate))
    t = np.arange(n, dtype=np.float64) / sample_rate
    x = np.sin(2.0 * math.pi * freq * t) * np.exp(-t / decay_s)
    return AudioClip(sample_rate, _to_int16_peak(x, peak * 32767.0))


def noise_burst(
    seed: int,
    seconds: float,
    sample_rate: int = MOCK_GENERATION_RATE,
    decay_s: float = 0.15,
    peak: float = 0.6,
) -> AudioClip:
    n = max(1, int(seconds * sample_rate))
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=np.float64) / sample_rate
    x = rng.standard_normal(n) * np.exp(-t / decay_s)
    return AudioClip(sample_rate, _to_int16_peak(x, peak * 32767.0))
