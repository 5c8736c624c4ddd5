"""Local HTTP stand-ins for the retrieval and generation services.

These exist so the live httpx adapters have something real to talk to in
tests and demos. Both serve the same deterministic content as the
in-process mock clients. The generation server can be started in a
misbehaving mode that returns wrong-length transfer output, which the
transfer contract tests rely on.
"""

from __future__ import annotations

import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import parse_qs, urlparse

import numpy as np

from .acquisition import RemoteSound, mock_remote_clip
from .audio import (
    AudioClip,
    clip_from_wav_bytes,
    clip_to_wav_bytes,
    mock_generated_clip,
    mock_transferred_clip,
)


class MockServer:
    """A ThreadingHTTPServer running on an ephemeral port."""

    def __init__(self, handler_cls: type[BaseHTTPRequestHandler]) -> None:
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), handler_cls)
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockServer":
        self.thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

    def __enter__(self) -> "MockServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def start_retrieval_server(
    corpus: list[RemoteSound], latency_s: float = 0.0
) -> MockServer:
    """GET /search/text?query=...&token=... and GET /sounds/{id}.wav."""

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args) -> None:  # keep test output quiet
            pass

        def do_GET(self) -> None:
            if latency_s > 0:
                import time

                time.sleep(latency_s)
            url = urlparse(self.path)
            if url.path == "/search/text":
                query = parse_qs(url.query).get("query", [""])[0]
                base = f"http://{self.headers.get('Host', '127.0.0.1')}"
                body = json.dumps(
                    {
                        "query": query,
                        "results": [
                            {
                                "id": s.id,
                                "name": s.name,
                                "description": s.description,
                                "preview": f"{base}/sounds/{s.id}.wav",
                            }
                            for s in corpus
                        ],
                    }
                ).encode("utf-8")
                self._send(200, "application/json", body)
                return
            if url.path.startswith("/sounds/") and url.path.endswith(".wav"):
                sound_id = url.path[len("/sounds/"):-len(".wav")]
                if any(s.id == sound_id for s in corpus):
                    self._send(200, "audio/wav", clip_to_wav_bytes(mock_remote_clip(sound_id)))
                    return
            self._send(404, "text/plain", b"not found")

        def _send(self, code: int, ctype: str, body: bytes) -> None:
            self.send_response(code)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return MockServer(Handler).start()


def start_generation_server(
    latency_s: float = 0.0,
    transfer_length_error: int = 0,
    fail_with: Optional[int] = None,
) -> MockServer:
    """POST JSON {prompt, mode, seed_wav?} -> WAV bytes.

    ``transfer_length_error`` shifts the transfer output length by that many
    samples (the misbehaving-server mode); ``fail_with`` forces an HTTP error
    status on every request.
    """

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args) -> None:
            pass

        def do_POST(self) -> None:
            if latency_s > 0:
                import time

                time.sleep(latency_s)
            if fail_with is not None:
                self._send(fail_with, "text/plain", b"forced failure")
                return
            length = int(self.headers.get("Content-Length", "0"))
            try:
                payload = json.loads(self.rfile.read(length))
                prompt = payload["prompt"]
                mode = payload.get("mode", "generate")
            except (ValueError, KeyError):
                self._send(400, "text/plain", b"bad request")
                return
            if mode == "generate":
                clip = mock_generated_clip(prompt)
            elif mode == "transfer":
                seed = clip_from_wav_bytes(base64.b64decode(payload["seed_wav"]))
                clip = mock_transferred_clip(seed, prompt)
                if transfer_length_error:
                    clip = _shift_length(clip, transfer_length_error)
            else:
                self._send(400, "text/plain", b"unknown mode")
                return
            self._send(200, "audio/wav", clip_to_wav_bytes(clip))

        def _send(self, code: int, ctype: str, body: bytes) -> None:
            self.send_response(code)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return MockServer(Handler).start()


def _shift_length(clip: AudioClip, delta: int) -> AudioClip:
    samples = clip.samples
    if delta > 0:
        samples = np.concatenate([samples, np.zeros(delta, dtype=np.int16)])
    else:
        samples = samples[: max(1, len(samples) + delta)]
    return AudioClip(clip.sample_rate, samples)
