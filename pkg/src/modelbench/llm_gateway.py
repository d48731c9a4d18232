"""Provider-agnostic chat access for the explanation and repair features.

Two wire dialects (chat-completions-style and messages-style JSON POSTs)
cover the supported model families; a scriptable mock provider keeps every
downstream test hermetic and deterministic. Secrets are resolved from the
environment at call time and never written to transcripts.
"""

from __future__ import annotations

import json
import os
import random
import re
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping, Optional

import httpx

from .errors import AuthFailure, InvalidConfig, MalformedResponse, RateLimited, Unavailable

PROVIDERS = ("openai_compatible", "anthropic_compatible", "mock")
ROLES = ("system", "user", "assistant")

ENV_PREFIX = "MW_LLM_"
ENV_KEYS = {
    "provider": "MW_LLM_PROVIDER",
    "base_url": "MW_LLM_BASE_URL",
    "model_name": "MW_LLM_MODEL",
    "mock_script": "MW_LLM_MOCK_SCRIPT",
}

_BUILTIN_DEFAULTS = {
    "provider": "openai_compatible",
    "base_url": "https://api.openai.com/v1",
    "model_name": "gpt-4",
    "api_key_ref": "MW_LLM_API_KEY",
    "temperature": 0.0,
    "max_output_tokens": 4096,
    "request_timeout_seconds": 60.0,
    "max_retries": 2,
    "mock_script": None,
}

RETRY_BACKOFF_BASE = 1.0


@dataclass(frozen=True)
class LlmConfig:
    provider: str = "openai_compatible"
    base_url: str = "https://api.openai.com/v1"
    model_name: str = "gpt-4"
    api_key_ref: str = "MW_LLM_API_KEY"
    temperature: float = 0.0
    max_output_tokens: int = 4096
    request_timeout_seconds: float = 60.0
    max_retries: int = 2
    mock_script: Optional[str] = None

    def validate(self) -> "LlmConfig":
        if self.provider not in PROVIDERS:
            raise InvalidConfig("provider", f"provider must be one of {PROVIDERS}")
        if self.provider == "mock":
            if not self.mock_script:
                raise InvalidConfig("mock_script",
                                    "mock provider needs a script path instead of a base_url")
        elif not self.base_url:
            raise InvalidConfig("base_url", "base_url is required for live providers")
        if not self.model_name:
            raise InvalidConfig("model_name", "model_name must be non-empty")
        if not (0.0 <= self.temperature <= 2.0):
            raise InvalidConfig("temperature", "temperature must be within [0, 2]")
        if self.max_output_tokens < 1:
            raise InvalidConfig("max_output_tokens", "max_output_tokens must be >= 1")
        if self.request_timeout_seconds <= 0:
            raise InvalidConfig("request_timeout_seconds",
                                "request_timeout_seconds must be positive")
        if self.max_retries < 0:
            raise InvalidConfig("max_retries", "max_retries must be >= 0")
        return self

    def to_doc(self) -> dict:
        return {
            "provider": self.provider,
            "base_url": self.base_url,
            "model_name": self.model_name,
            "api_key_ref": self.api_key_ref,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
            "request_timeout_seconds": self.request_timeout_seconds,
            "max_retries": self.max_retries,
            "mock_script": self.mock_script,
        }


_FIELD_PARSERS: dict[str, Callable] = {
    "temperature": float,
    "max_output_tokens": int,
    "request_timeout_seconds": float,
    "max_retries": int,
}


def load_llm_config(session: Optional[Mapping] = None,
                    overrides: Optional[Mapping] = None,
                    env: Optional[Mapping[str, str]] = None) -> LlmConfig:
    """Merge configuration layers: request override > session setting >
    environment > built-in default. Unknown or out-of-range values raise
    :class:`InvalidConfig` naming the field."""
    env = os.environ if env is None else env
    merged = dict(_BUILTIN_DEFAULTS)
    for fname, key in ENV_KEYS.items():
        if env.get(key):
            merged[fname] = env[key]
    for layer in (session or {}), (overrides or {}):
        for fname, value in layer.items():
            if fname not in _BUILTIN_DEFAULTS:
                raise InvalidConfig(fname, f"unknown configuration field {fname!r}")
            if value is not None:
                merged[fname] = value
    for fname, parse in _FIELD_PARSERS.items():
        try:
            merged[fname] = parse(merged[fname])
        except (TypeError, ValueError):
            raise InvalidConfig(fname, f"cannot parse {fname} value {merged[fname]!r}")
    return LlmConfig(**merged).validate()


@dataclass(frozen=True)
class Conversation:
    messages: tuple[tuple[str, str], ...]  # (role, content)

    def __post_init__(self):
        if not self.messages:
            raise ValueError("conversation must not be empty")
        for role, _ in self.messages:
            if role not in ROLES:
                raise ValueError(f"unknown role {role!r}")
        non_system = [role for role, _ in self.messages if role != "system"]
        if non_system and non_system[0] != "user":
            raise ValueError("first non-system message must be from the user")

    def last_user_content(self) -> str:
        for role, content in reversed(self.messages):
            if role == "user":
                return content
        return ""

    def to_doc(self) -> list[dict]:
        return [{"role": role, "content": content} for role, content in self.messages]


def conversation(*messages: tuple[str, str]) -> Conversation:
    return Conversation(messages=tuple(messages))


# --- wire dialects ---

def _openai_request(config: LlmConfig, convo: Conversation, key: str) -> dict:
    return {
        "url": config.base_url.rstrip("/") + "/chat/completions",
        "headers": {"Authorization": f"Bearer {key}",
                    "Content-Type": "application/json"},
        "json": {
            "model": config.model_name,
            "messages": convo.to_doc(),
            "temperature": config.temperature,
            "max_tokens": config.max_output_tokens,
        },
    }


def _openai_extract(body: dict) -> str:
    try:
        return body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"unexpected completion shape: {exc}") from exc


def _anthropic_request(config: LlmConfig, convo: Conversation, key: str) -> dict:
    system = "\n\n".join(c for r, c in convo.messages if r == "system")
    messages = [{"role": r, "content": c} for r, c in convo.messages if r != "system"]
    payload = {
        "model": config.model_name,
        "max_tokens": config.max_output_tokens,
        "temperature": config.temperature,
        "messages": messages,
    }
    if system:
        payload["system"] = system
    return {
        "url": config.base_url.rstrip("/") + "/v1/messages",
        "headers": {"x-api-key": key, "anthropic-version": "2023-06-01",
                    "Content-Type": "application/json"},
        "json": payload,
    }


def _anthropic_extract(body: dict) -> str:
    try:
        return body["content"][0]["text"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"unexpected message shape: {exc}") from exc


_DIALECTS = {
    "openai_compatible": (_openai_request, _openai_extract),
    "anthropic_compatible": (_anthropic_request, _anthropic_extract),
}


class TransportError(Exception):
    """Network-level failure (connect error, timeout); always retryable."""


def _http_transport(request: dict, timeout: float) -> tuple[int, dict]:
    try:
        response = httpx.post(request["url"], headers=request["headers"],
                              json=request["json"], timeout=timeout)
    except httpx.HTTPError as exc:
        raise TransportError(str(exc)) from exc
    try:
        body = response.json()
    except ValueError:
        body = {}
    return response.status_code, body


class _MockScript:
    def __init__(self, path: str):
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise InvalidConfig("mock_script", f"cannot load mock script {path}: {exc}")
        self.responses: list[str] = list(raw.get("responses", ()))
        self.rules = [(re.compile(rule["pattern"], re.DOTALL), rule["response"])
                      for rule in raw.get("rules", ())]
        self.default: Optional[str] = raw.get("default")
        if not self.responses and not self.rules and self.default is None:
            raise InvalidConfig("mock_script",
                                f"mock script {path} has neither responses nor rules")
        self.cursor = 0

    def reply(self, convo: Conversation) -> str:
        prompt = convo.last_user_content()
        for pattern, response in self.rules:
            if pattern.search(prompt):
                return response
        if self.responses:
            response = self.responses[self.cursor % len(self.responses)]
            self.cursor += 1
            return response
        if self.default is not None:
            return self.default
        raise MalformedResponse("no mock rule matched and no default reply given")


@dataclass
class LlmClient:
    """One chat backend. Shareable across threads; retry state is per call,
    and the mock's scripted cursor advances atomically per reply."""

    config: LlmConfig
    transport: Callable[[dict, float], tuple[int, dict]] = _http_transport
    transcript_path: Optional[Path] = None
    sleep: Callable[[float], None] = time.sleep
    rng: random.Random = field(default_factory=random.Random)
    _mock: Optional[_MockScript] = None

    def __post_init__(self):
        self.config.validate()
        if self.config.provider == "mock":
            self._mock = _MockScript(self.config.mock_script)

    def chat(self, convo: Conversation) -> str:
        if self._mock is not None:
            reply = self._mock.reply(convo)
            self._log(convo, reply=reply)
            return reply

        key = os.environ.get(self.config.api_key_ref, "")
        if not key:
            raise AuthFailure(
                f"credential env var {self.config.api_key_ref} is not set")

        build, extract = _DIALECTS[self.config.provider]
        request = build(self.config, convo, key)
        attempts = self.config.max_retries + 1
        last_failure: Exception = Unavailable("no attempt made")
        for attempt in range(attempts):
            try:
                status, body = self.transport(request, self.config.request_timeout_seconds)
            except TransportError as exc:
                last_failure = Unavailable(f"transport failure: {exc}")
            else:
                if status in (401, 403):
                    self._log(convo, error=f"auth failure ({status})")
                    raise AuthFailure(f"provider rejected credentials ({status})")
                if status == 429:
                    last_failure = RateLimited("provider rate limit (429)")
                elif status >= 500:
                    last_failure = Unavailable(f"provider unavailable ({status})")
                elif status >= 400:
                    self._log(convo, error=f"request rejected ({status})")
                    raise MalformedResponse(f"provider rejected the request ({status})")
                else:
                    reply = extract(body)
                    self._log(convo, reply=reply)
                    return reply
            if attempt < attempts - 1:
                # Full-jitter exponential backoff.
                self.sleep(self.rng.uniform(0, RETRY_BACKOFF_BASE * 2 ** attempt))
        self._log(convo, error=str(last_failure))
        raise last_failure

    def _log(self, convo: Conversation, reply: Optional[str] = None,
             error: Optional[str] = None) -> None:
        if self.transcript_path is None:
            return
        record = {
            "ts": datetime.now(timezone.utc).isoformat(),
            "provider": self.config.provider,
            "model": self.config.model_name,
            "request": convo.to_doc(),
            "response": reply,
            "error": error,
        }
        self.transcript_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.transcript_path, "a") as log:
            log.write(json.dumps(record) + "\n")


def chat(convo: Conversation, config: LlmConfig) -> str:
    """One-shot convenience wrapper around a fresh client."""
    return LlmClient(config).chat(convo)
