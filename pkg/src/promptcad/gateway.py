"""Provider-agnostic chat interface with conversation memory.

Two providers share one contract: a deterministic scriptable mock for tests
and reproduction, and an HTTP provider speaking the common chat-completions
wire shape.  The full transcript is resent on every call; transcripts are
append-only.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Sequence

import requests

ROLES = ("user", "assistant", "system")


class GatewayError(RuntimeError):
    pass


class TransportError(GatewayError):
    """Transient transport failure that survived every retry."""


class AuthError(GatewayError):
    """Missing or rejected credentials; never retried."""


class MockScriptError(GatewayError):
    """Mock script file is missing or malformed."""


class MockScriptExhausted(GatewayError):
    """The mock has no further scripted reply."""


class MockExpectationFailed(GatewayError):
    """Incoming user message did not contain the scripted guard substring."""


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str
    timestamp: datetime
    iteration: int = 0

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")

    def to_json_dict(self) -> dict:
        return {
            "role": self.role,
            "content": self.content,
            "timestamp": self.timestamp.isoformat(),
            "iteration": self.iteration,
        }


class Transcript:
    """Append-only ordered message log for one session."""

    def __init__(self, session_id: str):
        self.session_id = session_id
        self._messages: list[ChatMessage] = []
        self._lock = threading.Lock()

    @property
    def messages(self) -> tuple[ChatMessage, ...]:
        return tuple(self._messages)

    def append(self, role: str, content: str, iteration: int = 0) -> ChatMessage:
        with self._lock:
            now = datetime.now(timezone.utc)
            if self._messages and now < self._messages[-1].timestamp:
                now = self._messages[-1].timestamp
            message = ChatMessage(role, content, now, iteration)
            self._messages.append(message)
            return message

    def to_jsonl(self) -> str:
        return "".join(json.dumps(m.to_json_dict()) + "\n" for m in self._messages)

    def __len__(self) -> int:
        return len(self._messages)


@dataclass(frozen=True)
class ProviderConfig:
    """Where replies come from: a scripted mock or an HTTP chat endpoint."""

    kind: str = "mock"
    endpoint: str | None = None
    model_name: str | None = None
    api_key_env: str = "LLM_API_KEY"
    timeout: float = 30.0
    max_retries: int = 2
    script_path: str | None = None
    script: tuple | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("mock", "http"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "http":
            if not self.endpoint:
                raise ValueError("http provider requires an endpoint")
            if not self.api_key_env:
                raise ValueError("http provider requires api_key_env")
        if self.kind == "mock" and self.script_path is None and self.script is None:
            raise ValueError("mock provider requires a script path or inline script")


@dataclass(frozen=True)
class MockReply:
    reply: str
    expect: str | None = None


def _coerce_entry(entry) -> MockReply:
    if isinstance(entry, MockReply):
        return entry
    if isinstance(entry, str):
        return MockReply(entry)
    if isinstance(entry, dict):
        reply = entry.get("reply", entry.get("reply_text"))
        if not isinstance(reply, str) or not reply:
            raise MockScriptError(f"mock entry needs a non-empty 'reply': {entry!r}")
        expect = entry.get("expect", entry.get("expect_substring"))
        if expect is not None and not isinstance(expect, str):
            raise MockScriptError(f"'expect' must be a string: {entry!r}")
        return MockReply(reply, expect)
    raise MockScriptError(f"unsupported mock entry: {entry!r}")


def load_mock_script(path) -> list[MockReply]:
    """Load a JSON array of ``{reply, expect?}`` entries.

    When ``expect`` is present the incoming user message must contain it,
    which lets a script encode error-in, corrected-code-out dialogues.
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise MockScriptError(f"cannot load mock script {path}: {exc}") from exc
    if not isinstance(data, list):
        raise MockScriptError("mock script must be a JSON array")
    return [_coerce_entry(entry) for entry in data]


class MockProvider:
    """Replays scripted replies in order, enforcing per-reply guards."""

    def __init__(self, entries: Sequence):
        self._entries = [_coerce_entry(e) for e in entries]
        self._cursor = 0
        self._lock = threading.Lock()

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        with self._lock:
            if self._cursor >= len(self._entries):
                raise MockScriptExhausted(
                    f"mock script exhausted after {len(self._entries)} replies"
                )
            entry = self._entries[self._cursor]
            incoming = messages[-1].content if messages else ""
            if entry.expect is not None and entry.expect not in incoming:
                raise MockExpectationFailed(
                    f"expected message containing {entry.expect!r}, got {incoming!r}"
                )
            self._cursor += 1
            return entry.reply


class HttpProvider:
    """Chat-completions style endpoint: request carries the model name and a
    role/content message array; the first choice's message content is the
    reply.  Retries transient failures with exponential backoff from 1s."""

    def __init__(self, config: ProviderConfig, sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self._sleep = sleep
        self._session = requests.Session()

    def complete(self, messages: Sequence[ChatMessage]) -> str:
        key = os.environ.get(self.config.api_key_env)
        if not key:
            raise AuthError(
                f"environment variable {self.config.api_key_env} is not set"
            )
        body = {
            "model": self.config.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
        }
        body.update(self.config.extra)
        headers = {"Authorization": f"Bearer {key}"}
        backoff = 1.0
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(backoff)
                backoff *= 2
            try:
                response = self._session.post(
                    self.config.endpoint,
                    json=body,
                    headers=headers,
                    timeout=self.config.timeout,
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"provider rejected credentials ({response.status_code})")
            if response.status_code >= 500 or response.status_code == 429:
                last_error = TransportError(f"provider returned {response.status_code}")
                continue
            if response.status_code != 200:
                raise TransportError(
                    f"provider returned {response.status_code}: {response.text[:200]}"
                )
            try:
                return response.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise TransportError(f"malformed provider response: {exc}") from exc
        raise TransportError(f"transport failed after retries: {last_error}")


def provider_for(config: ProviderConfig):
    """Build the provider object a session holds for its lifetime."""
    if config.kind == "mock":
        entries = list(config.script) if config.script is not None else load_mock_script(
            config.script_path
        )
        return MockProvider(entries)
    return HttpProvider(config)


def send(transcript: Transcript, new_user_message: str, provider, iteration: int = 0) -> ChatMessage:
    """Append the user message, get the assistant reply, append and return it.

    The full prior transcript is sent as context on every call.  ``provider``
    is the object from :func:`provider_for` (a bare :class:`ProviderConfig`
    is accepted and wrapped, but mock scripts then restart each call).
    """
    if isinstance(provider, ProviderConfig):
        provider = provider_for(provider)
    transcript.append("user", new_user_message, iteration)
    reply = provider.complete(transcript.messages)
    return transcript.append("assistant", reply, iteration)


def write_transcript(transcript: Transcript, directory, filename: str | None = None) -> Path:
    """Persist the transcript as UTF-8 JSON Lines, one message per line."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / (filename or f"{transcript.session_id}.jsonl")
    path.write_text(transcript.to_jsonl(), encoding="utf-8")
    return path
