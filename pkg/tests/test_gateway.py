import json

import pytest
import requests

from promptcad.gateway import (
    AuthError,
    ChatMessage,
    HttpProvider,
    MockExpectationFailed,
    MockProvider,
    MockScriptError,
    MockScriptExhausted,
    ProviderConfig,
    Transcript,
    TransportError,
    load_mock_script,
    provider_for,
    send,
    write_transcript,
)


class TestMockProvider:
    def test_single_scripted_reply(self):
        transcript = Transcript("t1")
        provider = MockProvider([{"reply": "x + y + z"}])
        message = send(transcript, "make an equation", provider)
        assert message.role == "assistant"
        assert message.content == "x + y + z"
        assert [m.role for m in transcript.messages] == ["user", "assistant"]

    def test_exhaustion_on_third_send(self):
        transcript = Transcript("t2")
        provider = MockProvider([{"reply": "a"}, {"reply": "b"}])
        send(transcript, "one", provider)
        send(transcript, "two", provider)
        with pytest.raises(MockScriptExhausted):
            send(transcript, "three", provider)

    def test_guard_matches_substring(self):
        transcript = Transcript("t3")
        provider = MockProvider([{"reply": "A"}, {"expect": "error", "reply": "B"}])
        assert send(transcript, "hi", provider).content == "A"
        assert send(transcript, "error: x", provider).content == "B"

    def test_guard_failure(self):
        transcript = Transcript("t4")
        provider = MockProvider([{"reply": "A"}, {"expect": "error", "reply": "B"}])
        send(transcript, "hi", provider)
        with pytest.raises(MockExpectationFailed):
            send(transcript, "all good", provider)

    def test_load_script_accepts_aliases(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text(
            json.dumps(
                [
                    {"reply": "a"},
                    {"reply_text": "b", "expect_substring": "B"},
                ]
            )
        )
        entries = load_mock_script(path)
        assert [e.reply for e in entries] == ["a", "b"]
        assert entries[1].expect == "B"

    def test_load_script_rejects_malformed(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"not": "a list"}')
        with pytest.raises(MockScriptError):
            load_mock_script(path)
        path.write_text("[{}]")
        with pytest.raises(MockScriptError):
            load_mock_script(path)


class TestProviderConfig:
    def test_http_requires_endpoint(self):
        with pytest.raises(ValueError):
            ProviderConfig(kind="http")

    def test_mock_requires_script(self):
        with pytest.raises(ValueError):
            ProviderConfig(kind="mock")

    def test_provider_for_mock_file(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text(json.dumps([{"reply": "hello"}]))
        provider = provider_for(ProviderConfig(kind="mock", script_path=str(path)))
        transcript = Transcript("t")
        assert send(transcript, "hi", provider).content == "hello"


class _FakeResponse:
    def __init__(self, status_code, payload=None):
        self.status_code = status_code
        self._payload = payload or {}
        self.text = json.dumps(self._payload)

    def json(self):
        return self._payload


class TestHttpProvider:
    CONFIG = ProviderConfig(
        kind="http",
        endpoint="https://example.invalid/v1/chat/completions",
        model_name="test-model",
        api_key_env="PROMPTCAD_TEST_KEY",
        timeout=5.0,
        max_retries=2,
    )

    def test_missing_key_is_auth_error_before_any_call(self, monkeypatch):
        monkeypatch.delenv("PROMPTCAD_TEST_KEY", raising=False)
        calls = []
        provider = HttpProvider(self.CONFIG, sleep=lambda s: calls.append(s))
        provider._session.post = lambda *a, **k: pytest.fail("network was called")
        with pytest.raises(AuthError):
            provider.complete([ChatMessage("user", "hi", __import__("datetime").datetime.now(
                __import__("datetime").timezone.utc))])
        assert calls == []

    def test_retries_with_exponential_backoff(self, monkeypatch):
        monkeypatch.setenv("PROMPTCAD_TEST_KEY", "k")
        sleeps = []
        provider = HttpProvider(self.CONFIG, sleep=sleeps.append)
        attempts = []

        def post(url, json=None, headers=None, timeout=None):
            attempts.append(json)
            if len(attempts) < 3:
                raise requests.ConnectionError("boom")
            return _FakeResponse(
                200, {"choices": [{"message": {"content": "recovered"}}]}
            )

        provider._session.post = post
        transcript = Transcript("t")
        reply = send(transcript, "hello", provider)
        assert reply.content == "recovered"
        assert sleeps == [1.0, 2.0]
        assert attempts[0]["model"] == "test-model"
        assert attempts[0]["messages"][-1] == {"role": "user", "content": "hello"}

    def test_transport_error_after_retries(self, monkeypatch):
        monkeypatch.setenv("PROMPTCAD_TEST_KEY", "k")
        provider = HttpProvider(self.CONFIG, sleep=lambda s: None)

        def post(*args, **kwargs):
            raise requests.ConnectionError("down")

        provider._session.post = post
        with pytest.raises(TransportError):
            send(Transcript("t"), "hello", provider)

    def test_rejected_credentials(self, monkeypatch):
        monkeypatch.setenv("PROMPTCAD_TEST_KEY", "k")
        provider = HttpProvider(self.CONFIG, sleep=lambda s: None)
        provider._session.post = lambda *a, **k: _FakeResponse(401)
        with pytest.raises(AuthError):
            send(Transcript("t"), "hello", provider)

    def test_server_errors_retry_then_fail(self, monkeypatch):
        monkeypatch.setenv("PROMPTCAD_TEST_KEY", "k")
        sleeps = []
        provider = HttpProvider(self.CONFIG, sleep=sleeps.append)
        provider._session.post = lambda *a, **k: _FakeResponse(500)
        with pytest.raises(TransportError):
            send(Transcript("t"), "hello", provider)
        assert sleeps == [1.0, 2.0]

    def test_full_history_resent(self, monkeypatch):
        monkeypatch.setenv("PROMPTCAD_TEST_KEY", "k")
        bodies = []

        def post(url, json=None, headers=None, timeout=None):
            bodies.append(json)
            return _FakeResponse(200, {"choices": [{"message": {"content": "ok"}}]})

        provider = HttpProvider(self.CONFIG, sleep=lambda s: None)
        provider._session.post = post
        transcript = Transcript("t")
        send(transcript, "first", provider)
        send(transcript, "second", provider)
        assert [m["content"] for m in bodies[1]["messages"]] == ["first", "ok", "second"]


class TestTranscript:
    def test_append_only_surface(self):
        transcript = Transcript("t")
        transcript.append("user", "hi")
        messages = transcript.messages
        assert isinstance(messages, tuple)
        assert not hasattr(transcript, "remove")

    def test_timestamps_non_decreasing(self):
        transcript = Transcript("t")
        for index in range(5):
            transcript.append("user", f"m{index}", index)
        stamps = [m.timestamp for m in transcript.messages]
        assert all(a <= b for a, b in zip(stamps, stamps[1:]))

    def test_jsonl_round_trip(self, tmp_path):
        transcript = Transcript("t")
        transcript.append("user", "hello", 0)
        transcript.append("assistant", "world", 0)
        path = write_transcript(transcript, tmp_path)
        lines = path.read_text("utf-8").splitlines()
        assert len(lines) == 2
        first = json.loads(lines[0])
        assert first["role"] == "user"
        assert first["content"] == "hello"
        assert "timestamp" in first and first["iteration"] == 0

    def test_empty_content_rejected(self):
        transcript = Transcript("t")
        with pytest.raises(ValueError):
            transcript.append("user", "")

    def test_unknown_role_rejected(self):
        transcript = Transcript("t")
        with pytest.raises(ValueError):
            transcript.append("robot", "hi")
