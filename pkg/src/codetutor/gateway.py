"""Chat-completion backends behind one completion contract.

Remote speaks the de-facto JSON chat-completion wire format
(messages array of {role, content}; response choices[0].message.content).
Scripted pops canned responses for deterministic offline runs.
"""

from __future__ import annotations

import json
import os
import random
import time
from dataclasses import dataclass, field
from typing import Optional

import requests

from .errors import (
    ConfigError,
    HttpStatusError,
    MalformedResponseError,
    ScriptExhaustedError,
    TransportFailure,
)
from .prompts import RenderedPrompt

API_KEY_ENV = "CODETUTOR_API_KEY"


@dataclass
class Completion:
    text: str
    usage: Optional[dict] = None  # token counts when the wire response has them
    attempts: int = 1


@dataclass
class BackendConfig:
    kind: str = "Scripted"  # "Remote" | "Scripted"
    base_url: str = ""
    model_name: str = ""
    temperature: float = 0.0
    timeout: float = 60.0
    max_retries: int = 2

    def validate(self) -> None:
        if self.kind not in ("Remote", "Scripted"):
            raise ConfigError(f"unknown backend kind {self.kind!r}")
        if self.kind == "Remote" and (not self.base_url or not self.model_name):
            raise ConfigError("Remote backend requires base_url and model_name")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")


class ScriptedBackend:
    """Deterministic canned-response backend for offline testing.

    With strict=False an exhausted script repeats its last response, which
    lets one universal fixture drive arbitrarily long sessions. delay_s
    simulates backend latency for timeout tests.
    """

    def __init__(self, script: list[str], strict: bool = True, delay_s: float = 0.0):
        self.script = list(script)
        self.cursor = 0
        self.strict = strict
        self.delay_s = delay_s
        self.calls: list[RenderedPrompt] = []

    def complete(self, prompt: RenderedPrompt) -> Completion:
        if not prompt.messages:
            raise ValueError("prompt must be non-empty")
        self.calls.append(prompt)
        if self.delay_s:
            time.sleep(self.delay_s)
        if self.cursor >= len(self.script):
            if self.strict or not self.script:
                raise ScriptExhaustedError(
                    f"script exhausted after {self.cursor} responses"
                )
            return Completion(text=self.script[-1])
        text = self.script[self.cursor]
        self.cursor += 1
        return Completion(text=text)

    @classmethod
    def from_file(cls, path, strict: bool = None) -> "ScriptedBackend":
        """Load a script file: JSON {"responses": [...], "strict": bool}."""
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        responses = data["responses"]
        if strict is None:
            strict = bool(data.get("strict", True))
        return cls(responses, strict=strict, delay_s=float(data.get("delay_s", 0.0)))


def serialize_request(config: BackendConfig, prompt: RenderedPrompt) -> dict:
    return {
        "model": config.model_name,
        "messages": [{"role": r, "content": c} for r, c in prompt.messages],
        "temperature": config.temperature,
    }


class RemoteBackend:
    def __init__(self, config: BackendConfig, session: Optional[requests.Session] = None):
        config.validate()
        if config.kind != "Remote":
            raise ConfigError("RemoteBackend requires kind=Remote")
        self.config = config
        self._http = session or requests.Session()

    def complete(self, prompt: RenderedPrompt) -> Completion:
        if not prompt.messages:
            raise ValueError("prompt must be non-empty")
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        try:
            resp = self._http.post(
                url,
                json=serialize_request(self.config, prompt),
                headers=headers,
                timeout=self.config.timeout,
            )
        except requests.RequestException as exc:
            raise TransportFailure(str(exc)) from exc
        if resp.status_code != 200:
            raise HttpStatusError(resp.status_code, resp.text)
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"bad completion response: {exc}") from exc
        if not isinstance(text, str):
            raise MalformedResponseError("message content is not a string")
        return Completion(text=text, usage=body.get("usage"))


def _retryable(exc: Exception) -> bool:
    if isinstance(exc, TransportFailure):
        return True
    if isinstance(exc, HttpStatusError):
        return exc.status == 429 or 500 <= exc.status < 600
    return False


def with_retry(
    backend,
    prompt: RenderedPrompt,
    max_retries: int = 2,
    base_delay: float = 0.5,
    rng: Optional[random.Random] = None,
    sleep=time.sleep,
) -> Completion:
    """Retry transient failures with exponential backoff and full jitter."""
    rng = rng or random.Random()
    attempts = 0
    while True:
        attempts += 1
        try:
            result = backend.complete(prompt)
            result.attempts = attempts
            return result
        except Exception as exc:
            if not _retryable(exc) or attempts > max_retries:
                raise
            sleep(rng.uniform(0, base_delay * (2 ** (attempts - 1))))


def make_backend(config: BackendConfig, script: Optional[list[str]] = None):
    config.validate()
    if config.kind == "Scripted":
        return ScriptedBackend(script or [], strict=True)
    return RemoteBackend(config)
