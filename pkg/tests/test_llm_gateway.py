from __future__ import annotations

import json

import pytest

from modelbench.errors import AuthFailure, InvalidConfig, MalformedResponse, Unavailable
from modelbench.llm_gateway import (
    Conversation,
    LlmClient,
    LlmConfig,
    TransportError,
    conversation,
    load_llm_config,
)


def mock_config(tmp_path, script: dict) -> LlmConfig:
    path = tmp_path / "script.json"
    path.write_text(json.dumps(script))
    return LlmConfig(provider="mock", mock_script=str(path))


def user_says(text: str) -> Conversation:
    return conversation(("system", "be brief"), ("user", text))


class TestConversation:
    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Conversation(messages=())

    def test_first_non_system_must_be_user(self):
        with pytest.raises(ValueError):
            conversation(("assistant", "hello"))

    def test_system_prefix_allowed(self):
        convo = user_says("hi")
        assert convo.last_user_content() == "hi"


class TestMockProvider:
    def test_ordered_responses_cycle(self, tmp_path):
        client = LlmClient(mock_config(tmp_path, {"responses": ["one", "two"]}))
        got = [client.chat(user_says(f"q{i}")) for i in range(3)]
        assert got == ["one", "two", "one"]

    def test_pattern_rules(self, tmp_path):
        script = {"rules": [{"pattern": "beans", "response": "about beans"}],
                  "default": "generic"}
        client = LlmClient(mock_config(tmp_path, script))
        assert client.chat(user_says("tell me about beans")) == "about beans"
        assert client.chat(user_says("something else")) == "generic"

    def test_echo_via_transcript_is_deterministic(self, tmp_path):
        config = mock_config(tmp_path, {"responses": ["fixed"]})
        a = LlmClient(config).chat(user_says("x"))
        b = LlmClient(config).chat(user_says("x"))
        assert a == b == "fixed"

    def test_no_network_calls(self, tmp_path):
        def exploding_transport(request, timeout):
            raise AssertionError("mock provider must not touch the network")

        client = LlmClient(mock_config(tmp_path, {"responses": ["ok"]}),
                           transport=exploding_transport)
        assert client.chat(user_says("x")) == "ok"

    def test_empty_script_rejected(self, tmp_path):
        with pytest.raises(InvalidConfig):
            LlmClient(mock_config(tmp_path, {}))


class TestRetries:
    def make_client(self, outcomes, monkeypatch, max_retries=2):
        monkeypatch.setenv("MW_LLM_API_KEY", "sekret-value-123")
        calls = []

        def transport(request, timeout):
            calls.append(request)
            outcome = outcomes[min(len(calls) - 1, len(outcomes) - 1)]
            if isinstance(outcome, Exception):
                raise outcome
            return outcome

        config = LlmConfig(provider="openai_compatible", base_url="https://x.test/v1",
                           model_name="m", max_retries=max_retries)
        client = LlmClient(config, transport=transport, sleep=lambda s: None)
        return client, calls

    def ok(self, text="fine"):
        return (200, {"choices": [{"message": {"content": text}}]})

    def test_two_failures_then_success(self, monkeypatch):
        client, calls = self.make_client(
            [TransportError("boom"), (503, {}), self.ok()], monkeypatch)
        assert client.chat(user_says("q")) == "fine"
        assert len(calls) == 3

    def test_retries_exhausted(self, monkeypatch):
        client, calls = self.make_client([(503, {})], monkeypatch, max_retries=1)
        with pytest.raises(Unavailable):
            client.chat(user_says("q"))
        assert len(calls) == 2

    def test_auth_failure_not_retried(self, monkeypatch):
        client, calls = self.make_client([(401, {})], monkeypatch)
        with pytest.raises(AuthFailure):
            client.chat(user_says("q"))
        assert len(calls) == 1

    def test_missing_credential_fails_before_any_request(self, monkeypatch):
        monkeypatch.delenv("MW_LLM_API_KEY", raising=False)
        calls = []

        def transport(request, timeout):
            calls.append(request)
            return self.ok()

        config = LlmConfig(provider="openai_compatible", base_url="https://x.test/v1")
        client = LlmClient(config, transport=transport)
        with pytest.raises(AuthFailure):
            client.chat(user_says("q"))
        assert calls == []

    def test_malformed_body_raises(self, monkeypatch):
        client, _ = self.make_client([(200, {"unexpected": True})], monkeypatch)
        with pytest.raises(MalformedResponse):
            client.chat(user_says("q"))


class TestAnthropicDialect:
    def test_system_goes_top_level(self, monkeypatch):
        monkeypatch.setenv("MW_LLM_API_KEY", "sekret-value-123")
        seen = {}

        def transport(request, timeout):
            seen.update(request)
            return (200, {"content": [{"text": "ok"}]})

        config = LlmConfig(provider="anthropic_compatible",
                           base_url="https://a.test", model_name="claude")
        assert LlmClient(config, transport=transport).chat(user_says("q")) == "ok"
        assert seen["url"].endswith("/v1/messages")
        assert seen["json"]["system"] == "be brief"
        assert all(m["role"] != "system" for m in seen["json"]["messages"])
        assert seen["headers"]["x-api-key"] == "sekret-value-123"


class TestConfigLoading:
    def test_env_only(self):
        env = {"MW_LLM_PROVIDER": "anthropic_compatible",
               "MW_LLM_BASE_URL": "https://a.test",
               "MW_LLM_MODEL": "claude-3"}
        config = load_llm_config(env=env)
        assert config.provider == "anthropic_compatible"
        assert config.model_name == "claude-3"

    def test_override_beats_session_beats_env(self):
        env = {"MW_LLM_MODEL": "env-model"}
        config = load_llm_config(session={"model_name": "session-model"},
                                 overrides={"model_name": "override-model"},
                                 env=env)
        assert config.model_name == "override-model"
        config = load_llm_config(session={"model_name": "session-model"}, env=env)
        assert config.model_name == "session-model"

    def test_builtin_defaults(self):
        config = load_llm_config(env={})
        assert config.temperature == 0.0
        assert config.max_retries == 2

    def test_temperature_out_of_range_names_field(self):
        with pytest.raises(InvalidConfig) as exc_info:
            load_llm_config(overrides={"temperature": 5}, env={})
        assert exc_info.value.field == "temperature"

    def test_unknown_field_rejected(self):
        with pytest.raises(InvalidConfig):
            load_llm_config(overrides={"modle": "typo"}, env={})

    def test_mock_requires_script(self):
        with pytest.raises(InvalidConfig) as exc_info:
            load_llm_config(overrides={"provider": "mock"}, env={})
        assert exc_info.value.field == "mock_script"


class TestRedaction:
    def test_secret_never_persisted(self, tmp_path, monkeypatch):
        secret = "hunter2-very-secret"
        monkeypatch.setenv("MW_LLM_API_KEY", secret)

        def transport(request, timeout):
            return (200, {"choices": [{"message": {"content": "done"}}]})

        transcript = tmp_path / "transcript.jsonl"
        config = LlmConfig(provider="openai_compatible", base_url="https://x.test/v1")
        client = LlmClient(config, transport=transport, transcript_path=transcript)
        client.chat(user_says("q"))
        with pytest.raises(Unavailable):
            LlmClient(config, transport=lambda r, t: (503, {}),
                      transcript_path=transcript, sleep=lambda s: None,
                      ).chat(user_says("q"))
        assert secret not in transcript.read_text()

    def test_transcript_records_request_and_response(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MW_LLM_API_KEY", "k")
        transcript = tmp_path / "t.jsonl"
        config = LlmConfig(provider="openai_compatible", base_url="https://x.test/v1")
        client = LlmClient(
            config, transcript_path=transcript,
            transport=lambda r, t: (200, {"choices": [{"message": {"content": "pong"}}]}))
        client.chat(user_says("ping"))
        records = [json.loads(line) for line in transcript.read_text().splitlines()]
        assert len(records) == 1
        assert records[0]["response"] == "pong"
        assert records[0]["request"][-1]["content"] == "ping"
