"""Session configuration: TOML-style key/value file with env overrides.

Only the flat `[section]` / `key = value` subset is supported (strings,
numbers, booleans, comments), which covers every setting the system has.
Secrets are never read from the file alone: FOLEYSIM_CONTROLLER_API_KEY and
FOLEYSIM_RETRIEVAL_TOKEN override their file counterparts, and the exported
config snapshot masks both.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .engine import DEFAULT_DT
from .errors import ParseError

ENV_CONTROLLER_API_KEY = "FOLEYSIM_CONTROLLER_API_KEY"
ENV_RETRIEVAL_TOKEN = "FOLEYSIM_RETRIEVAL_TOKEN"


def parse_kv_file(text: str) -> dict[str, dict[str, Any]]:
    """Parse the supported TOML subset into {section: {key: value}}."""
    sections: dict[str, dict[str, Any]] = {}
    current = sections.setdefault("", {})
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ParseError(f"line {lineno}: empty section name")
            current = sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        current[key.strip()] = _parse_value(value.strip(), lineno)
    return sections


def _parse_value(token: str, lineno: int) -> Any:
    if not token:
        raise ParseError(f"line {lineno}: missing value")
    if token[0] in "\"'":
        if len(token) < 2 or token[-1] != token[0]:
            raise ParseError(f"line {lineno}: unterminated string")
        return token[1:-1]
    if token == "true":
        return True
    if token == "false":
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"line {lineno}: cannot parse value {token!r}") from None


@dataclass
class ControllerConfig:
    backend: str = "mock"  # "mock" | "http"
    model: str = "gpt-4"
    endpoint: str = ""
    api_key: str = ""
    temperature: float = 0.0
    timeout_s: float = 30.0


@dataclass
class RetrievalConfig:
    backend: str = "mock"
    endpoint: str = ""
    api_token: str = ""
    timeout_s: float = 20.0


@dataclass
class GenerationConfig:
    backend: str = "mock"
    endpoint: str = ""
    timeout_s: float = 60.0


@dataclass
class SessionConfig:
    dt: float = DEFAULT_DT
    max_workers: int = 8
    library_dir: str = ""
    seeds: dict[str, str] = field(default_factory=dict)  # event type -> wav path


@dataclass
class Config:
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    session: SessionConfig = field(default_factory=SessionConfig)

    def snapshot(self) -> dict:
        """Serializable view with secrets masked."""
        return {
            "controller": {
                "backend": self.controller.backend,
                "model": self.controller.model,
                "endpoint": self.controller.endpoint,
                "api_key": "***" if self.controller.api_key else "",
                "temperature": self.controller.temperature,
                "timeout_s": self.controller.timeout_s,
            },
            "retrieval": {
                "backend": self.retrieval.backend,
                "endpoint": self.retrieval.endpoint,
                "api_token": "***" if self.retrieval.api_token else "",
                "timeout_s": self.retrieval.timeout_s,
            },
            "generation": {
                "backend": self.generation.backend,
                "endpoint": self.generation.endpoint,
                "timeout_s": self.generation.timeout_s,
            },
            "session": {
                "dt": self.session.dt,
                "max_workers": self.session.max_workers,
                "library_dir": self.session.library_dir,
                "seeds": dict(self.session.seeds),
            },
        }


def _apply(target: Any, values: dict[str, Any], section: str) -> None:
    for key, value in values.items():
        if not hasattr(target, key):
            raise ParseError(f"[{section}] unknown key {key!r}")
        current = getattr(target, key)
        if isinstance(current, float) and isinstance(value, int):
            value = float(value)
        if current is not None and not isinstance(value, type(current)) and not isinstance(current, dict):
            raise ParseError(f"[{section}] {key}: expected {type(current).__name__}")
        setattr(target, key, value)


def load_config(path: Optional[str | Path] = None, env: Optional[dict] = None) -> Config:
    cfg = Config()
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read config {path}: {exc}") from exc
        sections = parse_kv_file(text)
        known = {
            "controller": cfg.controller,
            "retrieval": cfg.retrieval,
            "generation": cfg.generation,
            "session": cfg.session,
        }
        for name, values in sections.items():
            if not values:
                continue
            if name == "seeds":
                cfg.session.seeds.update({k: str(v) for k, v in values.items()})
            elif name in known:
                _apply(known[name], values, name)
            else:
                raise ParseError(f"unknown config section [{name}]")
    environ = env if env is not None else os.environ
    if environ.get(ENV_CONTROLLER_API_KEY):
        cfg.controller.api_key = environ[ENV_CONTROLLER_API_KEY]
    if environ.get(ENV_RETRIEVAL_TOKEN):
        cfg.retrieval.api_token = environ[ENV_RETRIEVAL_TOKEN]
    return cfg
