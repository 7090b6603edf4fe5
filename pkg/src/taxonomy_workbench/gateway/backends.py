"""Chat backends: a scripted replay backend and a generic HTTP backend.

The scripted backend makes whole sessions reproducible: it replays an
ordered fixture of canned responses and never touches the network. The
HTTP backend speaks the common single-turn chat-completions shape and is
deliberately small; anything smarter than retry-with-backoff lives above
this layer.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

from ..errors import (
    BackendError,
    BackendStatusError,
    BackendTimeoutError,
    ConfigError,
    FixtureMissError,
    NetworkError,
)

logger = logging.getLogger(__name__)

DEFAULT_TOKEN_ENV = "WORKBENCH_LLM_TOKEN"


@dataclass(frozen=True)
class ChatRequest:
    """One single-turn request: a prompt plus optional named attachments."""

    prompt: str
    attachments: tuple[tuple[str, str], ...] = ()
    max_output_tokens: int = 2048
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ConfigError("prompt must be non-empty")
        if self.max_output_tokens <= 0:
            raise ConfigError("max_output_tokens must be positive")
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError("temperature must be within [0, 2]")
        if not isinstance(self.attachments, tuple):
            object.__setattr__(self, "attachments", tuple(tuple(a) for a in self.attachments))


@dataclass(frozen=True)
class ChatResponse:
    text: str
    backend_id: str
    latency_ms: float


class Backend(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


@dataclass(frozen=True)
class FixtureStep:
    """One canned exchange: a matcher plus the response to replay.

    ``match`` is a substring of the expected prompt ("" matches anything);
    ``match_sha256`` matches the hex digest of the exact prompt text.
    Exactly one of the two must be set.
    """

    response: str
    match: str | None = None
    match_sha256: str | None = None

    def __post_init__(self) -> None:
        if (self.match is None) == (self.match_sha256 is None):
            raise ConfigError("fixture step needs exactly one of 'match' or 'match_sha256'")

    def matches(self, prompt: str) -> bool:
        if self.match is not None:
            return self.match in prompt
        digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
        return digest == self.match_sha256


class ScriptedBackend:
    """Replays an ordered fixture; each step answers at most one request.

    For every request the first unconsumed step whose matcher fits wins.
    In strict mode an unmatched request raises; otherwise the configured
    default response comes back. Consumption is serialized with a lock so
    matching stays deterministic under concurrent callers.
    """

    def __init__(
        self,
        steps: Sequence[FixtureStep],
        strict: bool = True,
        default_response: str = "",
        backend_id: str = "scripted",
    ) -> None:
        self.steps = list(steps)
        self.strict = strict
        self.default_response = default_response
        self.backend_id = backend_id
        self.call_history: list[ChatRequest] = []
        self._consumed = [False] * len(self.steps)
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path, strict: bool = True) -> ScriptedBackend:
        """Load a fixture file: one JSON object per line, blank lines skipped."""
        steps: list[FixtureStep] = []
        for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict) or "response" not in record:
                raise ConfigError(f"{path}:{line_no}: fixture step needs a 'response' key")
            steps.append(
                FixtureStep(
                    response=record["response"],
                    match=record.get("match"),
                    match_sha256=record.get("match_sha256"),
                )
            )
        return cls(steps, strict=strict, backend_id=f"scripted:{Path(path).name}")

    def complete(self, request: ChatRequest) -> ChatResponse:
        started = time.perf_counter()
        with self._lock:
            self.call_history.append(request)
            for index, step in enumerate(self.steps):
                if self._consumed[index] or not step.matches(request.prompt):
                    continue
                self._consumed[index] = True
                latency = (time.perf_counter() - started) * 1000.0
                return ChatResponse(step.response, self.backend_id, latency)
        if self.strict:
            preview = request.prompt[:120].replace("\n", " ")
            raise FixtureMissError(f"no unconsumed fixture step matches prompt: {preview!r}...")
        latency = (time.perf_counter() - started) * 1000.0
        return ChatResponse(self.default_response, self.backend_id, latency)


@dataclass
class HttpChatBackend:
    """Single-turn chat over HTTP in the common completions shape.

    Sends ``{"model", "messages", "temperature", "max_tokens"}`` and reads
    ``choices[0].message.content`` back. The bearer token is read from the
    environment variable named by ``token_env``; attachments are inlined
    into the prompt text.
    """

    endpoint: str
    model: str = "gpt-4"
    token_env: str = DEFAULT_TOKEN_ENV
    timeout: float = 60.0
    max_retries: int = 2
    backoff: float = 0.25
    backend_id: str = field(init=False)

    def __post_init__(self) -> None:
        self.backend_id = f"http:{self.model}"

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.token_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _payload(self, request: ChatRequest) -> dict[str, object]:
        prompt = request.prompt
        for name, text in request.attachments:
            prompt += f"\n--- {name} ---\n{text}"
        return {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }

    def complete(self, request: ChatRequest) -> ChatResponse:
        started = time.perf_counter()
        payload = self._payload(request)
        last_error: BackendError | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                reply = httpx.post(
                    self.endpoint, json=payload, headers=self._headers(), timeout=self.timeout
                )
            except httpx.TimeoutException as exc:
                last_error = BackendTimeoutError(f"chat endpoint timed out: {exc}")
                logger.warning("backend timeout (attempt %d): %s", attempt + 1, exc)
                continue
            except httpx.TransportError as exc:
                last_error = NetworkError(f"chat endpoint unreachable: {exc}")
                logger.warning("backend network error (attempt %d): %s", attempt + 1, exc)
                continue
            if reply.status_code >= 500:
                last_error = BackendStatusError(
                    f"chat endpoint returned {reply.status_code}", reply.status_code
                )
                logger.warning("backend 5xx (attempt %d): %d", attempt + 1, reply.status_code)
                continue
            if reply.status_code >= 400:
                raise BackendStatusError(
                    f"chat endpoint rejected the request: {reply.status_code} {reply.text[:200]}",
                    reply.status_code,
                )
            try:
                body = reply.json()
                text = body["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"unexpected response shape from chat endpoint: {exc}") from exc
            if not isinstance(text, str):
                raise BackendError("chat endpoint returned a non-string message content")
            latency = (time.perf_counter() - started) * 1000.0
            return ChatResponse(text, self.backend_id, latency)
        assert last_error is not None
        raise last_error


def backend_from_spec(spec: str, model: str = "gpt-4", strict: bool = True) -> Backend:
    """Build a backend from a CLI-style spec: ``scripted:PATH`` or ``http:URL``."""
    if spec.startswith(("http://", "https://")):
        return HttpChatBackend(endpoint=spec, model=model)
    kind, _, rest = spec.partition(":")
    if kind == "scripted" and rest:
        return ScriptedBackend.from_file(rest, strict=strict)
    if kind == "http" and rest:
        return HttpChatBackend(endpoint=rest, model=model)
    raise ConfigError(f"unrecognized backend spec {spec!r}; expected scripted:PATH or http:URL")
