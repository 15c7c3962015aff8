from __future__ import annotations

import subprocess
import sys

import pytest

from basehep.llm import (
    CompletionRequest,
    FixtureMiss,
    LiveConfig,
    LiveProvider,
    MockProvider,
    ProviderRefusal,
    ProviderUnavailable,
    UnknownPromptTag,
    dump_fixture_file,
    fingerprint_case,
    load_fixture_file,
)

PILOT_CASE = (
    "A pilot acknowledges an altitude clearance from air traffic control\n"
    "during final approach but reads back the wrong flight level.\n"
)


class TestFingerprint:
    def test_line_ending_insensitive(self):
        assert fingerprint_case("abc\n") == fingerprint_case("abc\r\n")

    def test_trailing_whitespace_insensitive(self):
        assert fingerprint_case("abc  \ndef\t\n") == fingerprint_case("abc\ndef")

    def test_distinct_texts_distinct_fingerprints(self):
        assert fingerprint_case("abc") != fingerprint_case("abd")

    def test_stable_across_processes(self):
        code = (
            "from basehep.llm import fingerprint_case;"
            f"print(fingerprint_case({PILOT_CASE!r}))"
        )
        outputs = {
            subprocess.run(
                [sys.executable, "-c", code], capture_output=True, text=True, check=True
            ).stdout.strip()
            for _ in range(2)
        }
        assert outputs == {fingerprint_case(PILOT_CASE)}


class TestRequestValidation:
    def test_unknown_tag_rejected(self):
        with pytest.raises(UnknownPromptTag):
            CompletionRequest(prompt_tag="agent.bogus", prompt="x", case_fingerprint="f")

    def test_empty_prompt_rejected(self):
        with pytest.raises(ValueError):
            CompletionRequest(prompt_tag="agent.task", prompt="", case_fingerprint="f")

    def test_negative_temperature_rejected(self):
        with pytest.raises(ValueError):
            CompletionRequest(
                prompt_tag="agent.task", prompt="x", case_fingerprint="f", temperature=-1
            )


class TestMockProvider:
    def _request(self, tag="agent.task", fingerprint="h1"):
        return CompletionRequest(prompt_tag=tag, prompt="anything", case_fingerprint=fingerprint)

    def test_fixture_echo(self):
        provider = MockProvider({("agent.task", "h1"): "OVERVIEW: the task"})
        result = provider.complete(self._request())
        assert result.text == "OVERVIEW: the task"
        assert result.latency >= 0.0
        assert result.provider_name == "mock"
        assert result.attempts == 1

    def test_deterministic(self):
        provider = MockProvider({("agent.task", "h1"): "same text"})
        assert provider.complete(self._request()).text == provider.complete(self._request()).text

    def test_missing_fixture_is_hard_error(self):
        provider = MockProvider({("agent.task", "h1"): "text"})
        with pytest.raises(FixtureMiss):
            provider.complete(self._request(tag="agent.context"))
        with pytest.raises(FixtureMiss):
            provider.complete(self._request(fingerprint="other"))

    def test_token_estimate_nonnegative(self):
        provider = MockProvider({("agent.task", "h1"): ""})
        assert provider.complete(self._request()).token_estimate == 0


class TestFixtureFile:
    def test_round_trip(self, tmp_path):
        fixtures = {
            ("agent.task", "aa"): "line one\nline two",
            ("attribute.extract", "bb"): 'quotes " and unicode é',
        }
        path = tmp_path / "fixtures.jsonl"
        path.write_text(dump_fixture_file(fixtures), encoding="utf-8")
        assert load_fixture_file(str(path)) == fixtures

    def test_bad_record(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"tag": "agent.task"}\n', encoding="utf-8")
        with pytest.raises(ValueError, match="bad.jsonl:1"):
            load_fixture_file(str(path))


class _FakeResponse:
    def __init__(self, status_code, text="", payload=None):
        self.status_code = status_code
        self.text = text
        self._payload = payload or {}

    def json(self):
        return self._payload


class _ScriptedProvider(LiveProvider):
    """LiveProvider with the HTTP POST replaced by a scripted sequence."""

    def __init__(self, config, script):
        super().__init__(config)
        self._script = list(script)
        self.calls = 0

    def _post(self, request):
        self.calls += 1
        action = self._script.pop(0)
        if isinstance(action, Exception):
            raise action
        return action


def _ok_response(text="hello"):
    return _FakeResponse(200, payload={"choices": [{"message": {"content": text}}]})


def _live_config():
    return LiveConfig(endpoint="http://example.invalid/v1", model="m", api_key="k", backoff_base=0.0)


class TestLiveProvider:
    def test_requires_api_key(self, monkeypatch):
        monkeypatch.delenv("KRAIL_API_KEY", raising=False)
        with pytest.raises(ValueError, match="KRAIL_API_KEY"):
            LiveProvider(LiveConfig(endpoint="e", model="m"))

    def test_reads_key_from_environment(self, monkeypatch):
        monkeypatch.setenv("KRAIL_API_KEY", "from-env")
        provider = LiveProvider(LiveConfig(endpoint="e", model="m"))
        assert provider._api_key == "from-env"

    def _request(self):
        return CompletionRequest(prompt_tag="agent.task", prompt="x", case_fingerprint="f")

    def test_success_first_attempt(self):
        provider = _ScriptedProvider(_live_config(), [_ok_response("answer")])
        result = provider.complete(self._request())
        assert result.text == "answer"
        assert result.attempts == 1

    def test_retries_transient_failures_then_succeeds(self):
        import requests

        provider = _ScriptedProvider(
            _live_config(),
            [requests.ConnectionError("boom"), _FakeResponse(500), _ok_response("ok")],
        )
        result = provider.complete(self._request())
        assert result.attempts == 3
        assert provider.calls == 3

    def test_gives_up_after_max_attempts(self):
        import requests

        provider = _ScriptedProvider(
            _live_config(), [requests.ConnectionError("boom")] * 3
        )
        with pytest.raises(ProviderUnavailable, match="3 attempts"):
            provider.complete(self._request())

    def test_client_error_is_refusal_without_retry(self):
        provider = _ScriptedProvider(_live_config(), [_FakeResponse(403, text="denied")])
        with pytest.raises(ProviderRefusal, match="403"):
            provider.complete(self._request())
        assert provider.calls == 1

    def test_rate_limit_status_is_retried(self):
        provider = _ScriptedProvider(_live_config(), [_FakeResponse(429), _ok_response()])
        assert provider.complete(self._request()).attempts == 2
