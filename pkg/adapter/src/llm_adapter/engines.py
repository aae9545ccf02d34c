"""Model engines: the text-in, text-out step between template and parser.

``echo`` answers with the request's attached gold document and exists for
closed-loop testing of the whole pipe with no API in reach. ``http`` POSTs
a chat-completions style JSON body and retries up to the configured limit;
whatever still fails surfaces as EngineError, which the serve layer turns
into a parse-failure response rather than a crash.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from typing import Any, Mapping


class EngineError(Exception):
    """The engine could not produce model text."""


class EchoEngine:
    """Deterministic gold passthrough; requires requests sent with gold."""

    def complete(self, prompt: str, request: Mapping[str, Any]) -> str:
        gold = request.get("gold")
        if not isinstance(gold, Mapping):
            return ""
        return json.dumps(gold, sort_keys=True, separators=(",", ":"))


class HttpEngine:
    """Chat-completions client on urllib; one POST per request, retried."""

    def __init__(self, config):
        self.url = config.api_base
        self.model = config.model
        self.temperature = config.temperature
        self.reasoning = config.reasoning
        self.retries = config.retries
        key = os.environ.get(config.api_key_env or "", "")
        if not key:
            raise EngineError(
                f"API key environment variable {config.api_key_env!r} is not set"
            )
        self.key = key

    def complete(self, prompt: str, request: Mapping[str, Any]) -> str:
        body: dict[str, Any] = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        if self.reasoning:
            # provider-dependent switch; documented in the README
            body["reasoning"] = {"enabled": True}
        data = json.dumps(body).encode("utf-8")
        last: Exception | None = None
        for _attempt in range(self.retries + 1):
            req = urllib.request.Request(
                self.url,
                data=data,
                headers={
                    "Content-Type": "application/json",
                    "Authorization": f"Bearer {self.key}",
                },
                method="POST",
            )
            try:
                with urllib.request.urlopen(req, timeout=90.0) as resp:
                    doc = json.loads(resp.read().decode("utf-8"))
                return _content_of(doc)
            except (urllib.error.URLError, urllib.error.HTTPError, OSError,
                    json.JSONDecodeError, EngineError) as exc:
                last = exc
        raise EngineError(
            f"API request failed after {self.retries + 1} attempt(s): {last}"
        )


def _content_of(doc: Any) -> str:
    if isinstance(doc, Mapping):
        choices = doc.get("choices")
        if isinstance(choices, list) and choices:
            message = choices[0].get("message", {})
            content = message.get("content")
            if isinstance(content, str):
                return content
        for key in ("content", "text"):
            if isinstance(doc.get(key), str):
                return doc[key]
    raise EngineError("API response carries no text content")


def make_engine(config):
    if config.engine == "echo":
        return EchoEngine()
    if config.engine == "http":
        return HttpEngine(config)
    raise EngineError(f"unknown engine: {config.engine!r}")
