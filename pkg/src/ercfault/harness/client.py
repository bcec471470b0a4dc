"""Chat-completion transports and the audited query entry point."""

from __future__ import annotations

import json
import logging
import math
import os
import random
import re
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Union

import requests

from .prompts import FULL_RULE, PromptSpec

log = logging.getLogger(__name__)


class QueryError(Exception):
    pass


class SizeError(QueryError):
    pass


class AuthError(QueryError):
    pass


class RateLimited(QueryError):
    pass


class ServiceError(QueryError):
    pass


class ReplayMiss(QueryError):
    pass


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


@dataclass
class ClientConfig:
    endpoint: str = ""
    model_id: str = "stub"
    temperature: float = 0.0
    api_key: Optional[str] = None
    max_context_tokens: int = 128_000
    timeout: float = 120.0
    max_retries: int = 4
    backoff: float = 2.0
    requests_per_second: float = 1.0

    def key(self) -> Optional[str]:
        return self.api_key if self.api_key is not None else os.environ.get("SCB_MODEL_KEY")


class StubTransport:
    """Returns canned text: a fixed string, or whatever ``reply(prompt)`` produces."""

    def __init__(self, reply: Union[str, Callable[[PromptSpec], str]] = "NO VIOLATIONS"):
        self.reply = reply

    def complete(self, prompt: PromptSpec, config: ClientConfig) -> str:
        return self.reply(prompt) if callable(self.reply) else self.reply


class SeededStub:
    """A deterministic stand-in model whose answers depend only on (seed, prompt)."""

    _FN_RE = re.compile(r"\bfunction\s+([A-Za-z_]\w*)\s*\(")
    _RULE_RE = re.compile(r"[^\n.]*\b(?:MUST|SHOULD)\b[^\n]*")

    def __init__(self, seed: int = 0):
        self.seed = seed

    def complete(self, prompt: PromptSpec, config: ClientConfig) -> str:
        rng = random.Random(f"{self.seed}:{prompt.digest}")
        if prompt.mode != FULL_RULE:
            return "ANSWER: YES" if rng.random() < 0.5 else "ANSWER: NO"
        if rng.random() < 0.5:
            return "NO VIOLATIONS"
        functions = sorted(set(self._FN_RE.findall(prompt.placeholders.get("<code>", ""))))
        rules = [r.strip() for r in self._RULE_RE.findall(prompt.placeholders.get("<ERC_content>", "")) if r.strip()]
        if not functions or not rules:
            return "NO VIOLATIONS"
        return f"RULE: {rng.choice(rules)}\nFUNCTION: {rng.choice(functions)}"


class ReplayTransport:
    """Serves responses from a previously written responses log, keyed by prompt digest."""

    def __init__(self, log_path: str | Path):
        self.responses: dict[str, str] = {}
        for entry in read_log(log_path):
            if entry.get("response") is not None:
                self.responses.setdefault(entry["prompt_sha256"], entry["response"])

    def complete(self, prompt: PromptSpec, config: ClientConfig) -> str:
        try:
            return self.responses[prompt.digest]
        except KeyError:
            raise ReplayMiss(f"no recorded response for prompt {prompt.digest[:12]}") from None


class LiveTransport:
    """OpenAI-style chat-completion over HTTPS with retry and backoff."""

    def __init__(self, session=None, sleep: Callable[[float], None] = time.sleep):
        self.session = session or requests.Session()
        self.sleep = sleep
        self._lock = threading.Lock()
        self._next = 0.0

    def _throttle(self, config: ClientConfig) -> None:
        if config.requests_per_second <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next - now
            self._next = max(now, self._next) + 1.0 / config.requests_per_second
        if delay > 0:
            self.sleep(delay)

    def complete(self, prompt: PromptSpec, config: ClientConfig) -> str:
        key = config.key()
        if not key:
            raise AuthError("SCB_MODEL_KEY is not set")
        if not config.endpoint:
            raise ServiceError("no endpoint configured")
        body = {
            "model": config.model_id,
            "temperature": config.temperature,
            "messages": [{"role": "user", "content": prompt.text}],
        }
        headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
        last = "no attempt made"
        for attempt in range(config.max_retries + 1):
            self._throttle(config)
            try:
                resp = self.session.post(config.endpoint, json=body, headers=headers, timeout=config.timeout)
            except requests.RequestException as exc:
                last = f"transport error: {exc}"
            else:
                if resp.status_code in (401, 403):
                    raise AuthError(f"endpoint rejected credentials (HTTP {resp.status_code})")
                if resp.status_code == 200:
                    try:
                        return resp.json()["choices"][0]["message"]["content"] or ""
                    except (ValueError, KeyError, IndexError, TypeError) as exc:
                        raise ServiceError(f"malformed completion payload: {exc}") from exc
                last = f"HTTP {resp.status_code}"
                if resp.status_code == 429 and attempt == config.max_retries:
                    raise RateLimited("rate limited after retries")
                if resp.status_code < 500 and resp.status_code != 429:
                    raise ServiceError(last)
            if attempt < config.max_retries:
                wait = config.backoff * (2**attempt)
                log.warning("query failed (%s); retrying in %.1fs", last, wait)
                self.sleep(wait)
        raise ServiceError(f"giving up after {config.max_retries + 1} attempts: {last}")


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class AuditLog:
    """Append-only JSON-lines record of every request."""

    def __init__(self, path: str | Path, clock: Callable[[], str] = _utc_now):
        self.path = Path(path)
        self.clock = clock
        self._lock = threading.Lock()

    def append(self, entry: dict) -> None:
        line = json.dumps({"timestamp": self.clock(), **entry}, sort_keys=True)
        with self._lock, self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")


def read_log(path: str | Path) -> list[dict]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if line.strip():
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{n}: not a JSON line ({exc})") from exc
    return out


def query_model(prompt: PromptSpec, config: ClientConfig, transport, audit: Optional[AuditLog] = None) -> str:
    """Send one prompt; size is checked before anything leaves the process."""
    entry = {
        "mode": prompt.mode,
        "template": prompt.template_id,
        "contract_id": prompt.contract_id,
        "record_id": prompt.record_id,
        "model": config.model_id,
        "temperature": config.temperature,
        "prompt_sha256": prompt.digest,
        "prompt_chars": len(prompt.text),
    }
    try:
        tokens = estimate_tokens(prompt.text)
        if tokens > config.max_context_tokens:
            raise SizeError(f"prompt of ~{tokens} tokens exceeds the {config.max_context_tokens}-token limit")
        text = transport.complete(prompt, config)
    except QueryError as exc:
        if audit is not None:
            audit.append({**entry, "response": None, "error": f"{type(exc).__name__}: {exc}"})
        raise
    if audit is not None:
        audit.append({**entry, "response": text, "error": None})
    return text
