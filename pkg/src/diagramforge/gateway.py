"""Uniform client for chat/vision model endpoints.

Two backends are supported, selected by the profile's endpoint URL:

  http(s)://...      OpenAI-compatible POST {url}/chat/completions
  scripted:<path>    deterministic canned-reply transcript (JSON Lines)

Secrets come from DIAGRAMFORGE_API_KEY_<PROFILE> environment variables only.
"""
from __future__ import annotations

import base64
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import httpx

from .errors import (
    ModelUnavailable,
    PayloadTooLarge,
    TranscriptExhausted,
    TranscriptParseError,
    UnsupportedModality,
)

DEFAULT_PAYLOAD_CAP = 20 * 1024 * 1024  # bytes of serialized request


@dataclass
class ModelProfile:
    name: str
    endpoint_url: str
    model_id: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 4096
    timeout_s: float = 60.0
    retries: int = 2
    supports_images: bool = False

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")

    @property
    def api_key(self) -> str:
        env = "DIAGRAMFORGE_API_KEY_" + re.sub(r"[^A-Za-z0-9]", "_", self.name).upper()
        return os.environ.get(env, "")


@dataclass
class ChatTurn:
    role: str  # system | user | assistant
    text: str
    images: list[bytes] = field(default_factory=list)

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"bad role {self.role!r}")
        if self.role == "system" and self.images:
            raise ValueError("system turns carry no images")


@dataclass
class TranscriptEntry:
    match: str
    reply: str
    regex: bool = False

    def matches(self, text: str) -> bool:
        if self.regex:
            return re.search(self.match, text) is not None
        return self.match in text


@dataclass
class ScriptedTranscript:
    entries: list[TranscriptEntry] = field(default_factory=list)
    mode: str = "match_any"  # or strict_sequence

    def save(self, path: Path | str) -> None:
        lines = []
        if self.mode != "match_any":
            lines.append(json.dumps({"mode": self.mode}))
        for e in self.entries:
            rec = {"match": e.match, "reply": e.reply}
            if e.regex:
                rec["regex"] = True
            lines.append(json.dumps(rec))
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_scripted(path: Path | str) -> ScriptedTranscript:
    path = Path(path)
    transcript = ScriptedTranscript()
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TranscriptParseError(f"cannot read transcript {path}: {exc}")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TranscriptParseError(f"{path}:{lineno}: bad JSON: {exc}", line=lineno)
        if "mode" in rec and "match" not in rec:
            mode = rec["mode"]
            if mode not in ("match_any", "strict_sequence"):
                raise TranscriptParseError(f"{path}:{lineno}: unknown mode {mode!r}", line=lineno)
            transcript.mode = mode
            continue
        if "match" not in rec or "reply" not in rec:
            raise TranscriptParseError(
                f"{path}:{lineno}: entry needs 'match' and 'reply'", line=lineno
            )
        transcript.entries.append(
            TranscriptEntry(rec["match"], rec["reply"], bool(rec.get("regex", False)))
        )
    return transcript


class ScriptedBackend:
    """Replays canned replies; strict_sequence consumes entries in order."""

    def __init__(self, transcript: ScriptedTranscript):
        self.transcript = transcript
        self._cursor = 0
        self._lock = threading.Lock()

    def reply_to(self, last_user_text: str) -> str:
        with self._lock:
            if self.transcript.mode == "strict_sequence":
                if self._cursor >= len(self.transcript.entries):
                    raise TranscriptExhausted(
                        f"scripted transcript exhausted after {self._cursor} entries"
                    )
                entry = self.transcript.entries[self._cursor]
                self._cursor += 1
                if not entry.matches(last_user_text):
                    raise ModelUnavailable(
                        f"strict transcript entry {self._cursor} does not match request"
                    )
                return entry.reply
            for entry in self.transcript.entries:
                if entry.matches(last_user_text):
                    return entry.reply
            raise ModelUnavailable("no scripted entry matches the request")


class Gateway:
    """Dispatches completions to scripted or HTTP backends with retry."""

    def __init__(self, payload_cap: int = DEFAULT_PAYLOAD_CAP,
                 sleep: Callable[[float], None] = time.sleep):
        self._scripted: dict[str, ScriptedBackend] = {}
        self._lock = threading.Lock()
        self.payload_cap = payload_cap
        self.telemetry: list[dict] = []
        self._sleep = sleep

    def _scripted_backend(self, profile: ModelProfile) -> ScriptedBackend:
        path = profile.endpoint_url[len("scripted:"):]
        with self._lock:
            backend = self._scripted.get(path)
            if backend is None:
                backend = ScriptedBackend(load_scripted(path))
                self._scripted[path] = backend
            return backend

    def complete(self, profile: ModelProfile, turns: list[ChatTurn]) -> str:
        if not turns:
            raise ValueError("turns must be non-empty")
        if turns[-1].role != "user":
            raise ValueError("last turn must be a user turn")
        has_images = any(t.images for t in turns)
        if has_images and not profile.supports_images:
            raise UnsupportedModality(f"profile {profile.name} does not accept images")

        if profile.endpoint_url.startswith("scripted:"):
            backend = self._scripted_backend(profile)
            self.telemetry.append({"profile": profile.name, "attempts": 1})
            return backend.reply_to(turns[-1].text)
        return self._complete_http(profile, turns)

    def complete_with_images(self, profile: ModelProfile, turns: list[ChatTurn]) -> str:
        if not profile.supports_images:
            raise UnsupportedModality(f"profile {profile.name} does not accept images")
        if not any(t.images for t in turns):
            raise ValueError("complete_with_images requires at least one image")
        return self.complete(profile, turns)

    def _complete_http(self, profile: ModelProfile, turns: list[ChatTurn]) -> str:
        payload = {
            "model": profile.model_id,
            "temperature": profile.temperature,
            "max_tokens": profile.max_output_tokens,
            "messages": [self._wire_message(t, profile) for t in turns],
        }
        body = json.dumps(payload).encode("utf-8")
        if len(body) > self.payload_cap:
            raise PayloadTooLarge(f"request body {len(body)} bytes exceeds cap {self.payload_cap}")
        url = profile.endpoint_url.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        if profile.api_key:
            headers["Authorization"] = f"Bearer {profile.api_key}"

        last_error: Exception | None = None
        attempts = 0
        for attempt in range(profile.retries + 1):
            attempts = attempt + 1
            try:
                resp = httpx.post(url, content=body, headers=headers,
                                  timeout=profile.timeout_s)
                resp.raise_for_status()
                data = resp.json()
                self.telemetry.append({"profile": profile.name, "attempts": attempts})
                return data["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                if attempt < profile.retries:
                    self._sleep(min(2.0 ** attempt * 0.5, 10.0))
        self.telemetry.append({"profile": profile.name, "attempts": attempts})
        raise ModelUnavailable(
            f"{profile.name} unavailable after {attempts} attempts: {last_error}"
        )

    @staticmethod
    def _wire_message(turn: ChatTurn, profile: ModelProfile) -> dict:
        if not turn.images:
            return {"role": turn.role, "content": turn.text}
        parts: list[dict] = [{"type": "text", "text": turn.text}]
        for img in turn.images:
            uri = "data:image/png;base64," + base64.b64encode(img).decode("ascii")
            parts.append({"type": "image_url", "image_url": {"url": uri}})
        return {"role": turn.role, "content": parts}
