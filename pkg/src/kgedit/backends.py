"""Answer backends: remote chat model, oracle fact table, scripted replay.

Everything downstream talks to a backend through one method,
``generate(prompt) -> text``. The remote backend speaks the OpenAI-compatible
chat-completions wire format at temperature 0 with bounded retries; the
oracle backend answers from a normalized question -> answer table and raises
instead of fabricating on a miss; the scripted backend replays canned
responses in order. The last two keep the whole pipeline deterministic and
offline for tests and evaluation.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Protocol

from .decompose import PromptTemplate
from .errors import (
    BackendError,
    ConfigError,
    ScriptExhaustedError,
    UnknownQuestionError,
    ValidationError,
)
from .text import lookup_key

logger = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "KGEDIT_API_KEY"
_CHAT_PATH = "/v1/chat/completions"

# Oracle question -> answer table, keyed by lookup_key-normalized questions.
OracleFactTable = dict[str, str]


class Backend(Protocol):
    def generate(self, prompt: str) -> str: ...


@dataclass(frozen=True, slots=True)
class BackendConfig:
    """Connection settings for a backend.

    ``kind`` is one of remote | oracle | scripted. Credentials are read from
    the environment variable named by ``api_key_env``; they never appear in
    config files or flags.
    """

    kind: str = "oracle"
    endpoint: str = ""
    model_name: str = ""
    temperature: float = 0.0
    max_retries: int = 3
    timeout: float = 30.0
    api_key_env: str = DEFAULT_API_KEY_ENV
    max_in_flight: int = 4
    backoff: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in {"remote", "oracle", "scripted"}:
            raise ConfigError(f"unknown backend kind {self.kind!r}")
        if self.max_retries < 1:
            raise ConfigError("max_retries must be at least 1")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be at least 1")


class RemoteBackend:
    """OpenAI-compatible chat-completions client.

    Retries transport failures, 429 and 5xx responses with exponential
    backoff up to ``config.max_retries`` attempts, then raises BackendError.
    Concurrent calls are capped by a semaphore.
    """

    def __init__(self, config: BackendConfig) -> None:
        if config.kind != "remote":
            raise ConfigError("RemoteBackend needs a config with kind='remote'")
        if not config.endpoint:
            raise ConfigError("remote backend needs an endpoint URL")
        self.config = config
        self._gate = threading.BoundedSemaphore(config.max_in_flight)
        self._url = config.endpoint.rstrip("/")
        if not self._url.endswith("/chat/completions"):
            self._url += _CHAT_PATH

    def generate(self, prompt: str) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        }
        last_error = "no attempt made"
        with self._gate:
            for attempt in range(self.config.max_retries):
                if attempt:
                    time.sleep(self.config.backoff * (2 ** (attempt - 1)))
                try:
                    resp = requests.post(
                        self._url, json=body, headers=headers, timeout=self.config.timeout
                    )
                except requests.RequestException as exc:
                    last_error = f"transport error: {exc}"
                    logger.warning("backend attempt %d failed: %s", attempt + 1, last_error)
                    continue
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = f"HTTP {resp.status_code}"
                    logger.warning("backend attempt %d failed: %s", attempt + 1, last_error)
                    continue
                if resp.status_code != 200:
                    raise BackendError(
                        f"chat completion failed: HTTP {resp.status_code}: {resp.text[:200]}"
                    )
                return self._parse_completion(resp)
        raise BackendError(
            f"chat completion failed after {self.config.max_retries} attempts: {last_error}"
        )

    @staticmethod
    def _parse_completion(resp) -> str:
        try:
            payload = resp.json()
            content = payload["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion payload: {exc}") from exc
        if not isinstance(content, str):
            raise BackendError("completion content is not text")
        return content


class OracleBackend:
    """Deterministic backend answering from a fact table.

    The question is pulled from the last "Question:" line of the prompt (the
    answer templates put it there); bare prompts are looked up whole. A miss
    raises UnknownQuestionError: the oracle never fabricates.
    """

    def __init__(self, table: Mapping[str, str]) -> None:
        self.table: OracleFactTable = {lookup_key(q): a for q, a in table.items()}

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "OracleBackend":
        return cls(dict(pairs))

    @classmethod
    def from_json_file(cls, path: str | Path) -> "OracleBackend":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read oracle table {path}: {exc}") from exc
        if not isinstance(payload, dict):
            raise ConfigError(f"oracle table {path} must be a JSON object")
        return cls({str(k): str(v) for k, v in payload.items()})

    def generate(self, prompt: str) -> str:
        question = _embedded_question(prompt)
        key = lookup_key(question)
        if key not in self.table:
            raise UnknownQuestionError(f"oracle has no entry for {question!r}")
        return self.table[key]


def _embedded_question(prompt: str) -> str:
    question = ""
    for line in prompt.splitlines():
        stripped = line.strip()
        if stripped.lower().startswith("question:"):
            question = stripped[len("question:"):].strip()
    return question or prompt.strip()


class ScriptedBackend:
    """Replays a fixed response list in order; raises when drained."""

    def __init__(self, responses: Iterable[str]) -> None:
        self._responses = list(responses)
        self._cursor = 0
        self.prompts: list[str] = []

    def generate(self, prompt: str) -> str:
        self.prompts.append(prompt)
        if self._cursor >= len(self._responses):
            raise ScriptExhaustedError(
                f"scripted backend drained after {len(self._responses)} responses"
            )
        out = self._responses[self._cursor]
        self._cursor += 1
        return out


def answer_with_fact(
    backend: Backend,
    question: str,
    retrieved_label: str,
    *,
    use_llm: bool = False,
    template: PromptTemplate | None = None,
) -> str:
    """Produce a hop answer from a retrieved object label.

    Deterministic mode (the evaluation default) returns the label verbatim.
    LLM mode renders the retrieval template with the fact and question and
    lets the backend phrase the answer.
    """
    if not retrieved_label.strip():
        raise ValidationError("retrieved label must be non-empty")
    if not use_llm:
        return retrieved_label
    if template is None:
        raise ConfigError("LLM-phrased retrieval answers need a retrieve template")
    prompt = template.render(question=question, fact=retrieved_label)
    return backend.generate(prompt)
