"""Provider gateway: deterministic mock for tests, chat-completion client for live use.

Requests are tagged with the pipeline stage and carry a fingerprint of the
case's data-source text. The mock provider resolves (tag, fingerprint) against
a fixture set and treats a missing key as a hard error; silent fallbacks would
mask pipeline drift.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Protocol

API_KEY_ENV = "KRAIL_API_KEY"

# Closed registry of pipeline stages allowed to issue completions.
PROMPT_TAGS = (
    "agent.task",
    "agent.context",
    "agent.cognitive",
    "agent.time",
    "attribute.extract",
)


class UnknownPromptTag(ValueError):
    pass


class ProviderUnavailable(RuntimeError):
    """Transport failure that persisted through all retry attempts."""


class ProviderRefusal(RuntimeError):
    """The provider answered with a non-success status."""


class FixtureMiss(KeyError):
    """Mock-only: no fixture registered for (tag, fingerprint)."""


def fingerprint_case(data_source_text: str) -> str:
    """Stable hash of a case's data-source text.

    Insensitive to line-ending style and trailing whitespace so fixtures
    survive copy/paste across platforms.
    """
    text = data_source_text.replace("\r\n", "\n").replace("\r", "\n")
    normalized = "\n".join(line.rstrip() for line in text.split("\n")).rstrip("\n")
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class CompletionRequest:
    prompt_tag: str
    prompt: str
    case_fingerprint: str
    max_tokens: int = 1024
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.prompt_tag not in PROMPT_TAGS:
            raise UnknownPromptTag(f"unknown prompt tag {self.prompt_tag!r}")
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    provider_name: str
    latency: float
    token_estimate: int
    attempts: int = 1


class Provider(Protocol):
    name: str

    def complete(self, request: CompletionRequest) -> CompletionResult: ...


def complete(provider: Provider, request: CompletionRequest) -> CompletionResult:
    return provider.complete(request)


def _estimate_tokens(text: str) -> int:
    return max(0, len(text) // 4)


class MockProvider:
    """Pure function of (fixture set, request); byte-identical on repeats."""

    def __init__(self, fixtures: Mapping[tuple[str, str], str], name: str = "mock"):
        self._fixtures = dict(fixtures)
        self.name = name

    def complete(self, request: CompletionRequest) -> CompletionResult:
        start = time.perf_counter()
        key = (request.prompt_tag, request.case_fingerprint)
        if key not in self._fixtures:
            raise FixtureMiss(
                f"no fixture for tag={request.prompt_tag!r} fingerprint={request.case_fingerprint!r}"
            )
        text = self._fixtures[key]
        return CompletionResult(
            text=text,
            provider_name=self.name,
            latency=max(0.0, time.perf_counter() - start),
            token_estimate=_estimate_tokens(text),
        )


def load_fixture_file(path: str) -> dict[tuple[str, str], str]:
    """Load mock fixtures from a JSON-lines record file.

    Each line is an object with ``tag``, ``fingerprint`` and ``response``.
    """
    fixtures: dict[tuple[str, str], str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                key = (record["tag"], record["fingerprint"])
                fixtures[key] = record["response"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad fixture record: {exc}") from None
    return fixtures


def dump_fixture_file(fixtures: Mapping[tuple[str, str], str]) -> str:
    lines = [
        json.dumps({"tag": tag, "fingerprint": fp, "response": response}, ensure_ascii=False)
        for (tag, fp), response in sorted(fixtures.items())
    ]
    return "\n".join(lines) + ("\n" if lines else "")


class _TokenBucket:
    """Requests-per-minute limiter; acquire() blocks until a slot is free."""

    def __init__(self, requests_per_minute: int):
        self._capacity = float(requests_per_minute)
        self._tokens = float(requests_per_minute)
        self._rate = requests_per_minute / 60.0
        self._updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self._capacity, self._tokens + (now - self._updated) * self._rate)
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self._rate
            time.sleep(wait)


@dataclass
class LiveConfig:
    endpoint: str
    model: str
    api_key: Optional[str] = None
    requests_per_minute: Optional[int] = None
    max_attempts: int = 3
    backoff_base: float = 0.5
    timeout: float = 60.0
    extra_headers: dict[str, str] = field(default_factory=dict)


class LiveProvider:
    """Minimal chat-completion POST client with retry and rate limiting."""

    name = "live"

    def __init__(self, config: LiveConfig):
        self._config = config
        key = config.api_key or os.environ.get(API_KEY_ENV)
        if not key:
            raise ValueError(f"live provider requires an API key ({API_KEY_ENV})")
        self._api_key = key
        self._bucket = (
            _TokenBucket(config.requests_per_minute) if config.requests_per_minute else None
        )

    def _post(self, request: CompletionRequest):
        import requests

        body = {
            "model": self._config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        }
        headers = {
            "Authorization": f"Bearer {self._api_key}",
            "Content-Type": "application/json",
            **self._config.extra_headers,
        }
        return requests.post(
            self._config.endpoint, json=body, headers=headers, timeout=self._config.timeout
        )

    def complete(self, request: CompletionRequest) -> CompletionResult:
        import requests

        start = time.perf_counter()
        last_error: Optional[str] = None
        for attempt in range(1, self._config.max_attempts + 1):
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                response = self._post(request)
            except requests.RequestException as exc:
                last_error = str(exc)
            else:
                if response.status_code == 200:
                    payload = response.json()
                    text = payload["choices"][0]["message"]["content"]
                    return CompletionResult(
                        text=text,
                        provider_name=self.name,
                        latency=max(0.0, time.perf_counter() - start),
                        token_estimate=_estimate_tokens(text),
                        attempts=attempt,
                    )
                if response.status_code not in (429,) and response.status_code < 500:
                    raise ProviderRefusal(
                        f"provider returned status {response.status_code}: {response.text[:500]}"
                    )
                last_error = f"status {response.status_code}"
            if attempt < self._config.max_attempts:
                time.sleep(self._config.backoff_base * (2 ** (attempt - 1)))
        raise ProviderUnavailable(
            f"provider unavailable after {self._config.max_attempts} attempts: {last_error}"
        )
