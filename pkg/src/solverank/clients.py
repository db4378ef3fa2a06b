"""Text-completion clients: an HTTP adapter plus offline mocks.

Hosted model backends are deliberately out of scope; everything that needs
a model talks to the ``TextClient`` interface.  The HTTP adapter speaks the
common chat-completions wire format and authenticates with the
SOLVERANK_API_KEY environment variable.  The offline mocks make every
pipeline stage runnable and deterministic without network access:

* ``ReplayClient``   -- replies recorded on disk, keyed by prompt hash
* ``ParaphraseClient`` -- rewrites an anchor statement by dictionary
  substitution (the vocabulary-swap toy protocol)
* ``ConstClient``    -- one fixed reply for every prompt
* ``CachingClient``  -- persistent prompt->reply cache around any client,
  keyed by (model, prompt) hash, enabling resumable runs
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
import urllib.error
import urllib.request
from abc import ABC, abstractmethod
from pathlib import Path

from solverank.errors import ClientError
from solverank.prompts import extract_generate_description
from solverank.util import atomic_write_text

log = logging.getLogger(__name__)

API_KEY_ENV = "SOLVERANK_API_KEY"

RETRY_ATTEMPTS = 3
RETRY_BASE_S = 1.0
RETRY_FACTOR = 2.0


class TextClient(ABC):
    """Pure request/response completion interface."""

    model: str = "unknown"

    @abstractmethod
    def complete(self, prompt: str) -> str:
        """Return the model reply for a prompt.  Raises ClientError on failure."""


class HttpTextClient(TextClient):
    """Chat-completions HTTP backend with retry and exponential backoff.

    Transport failures (network errors, HTTP 429/5xx) are retried up to
    ``RETRY_ATTEMPTS`` times with backoff base 1s, factor 2.  Malformed
    response bodies are not retried here; they surface as ClientError.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        temperature: float = 1.0,
        max_tokens: int = 2048,
        timeout_s: float = 120.0,
        sleep=time.sleep,
    ):
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.timeout_s = timeout_s
        self._sleep = sleep

    def complete(self, prompt: str) -> str:
        payload = json.dumps(
            {
                "model": self.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": self.temperature,
                "max_tokens": self.max_tokens,
            }
        ).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_error: Exception | None = None
        for attempt in range(RETRY_ATTEMPTS):
            if attempt:
                self._sleep(RETRY_BASE_S * RETRY_FACTOR ** (attempt - 1))
            try:
                request = urllib.request.Request(self.endpoint, data=payload, headers=headers)
                with urllib.request.urlopen(request, timeout=self.timeout_s) as response:
                    body = response.read().decode("utf-8")
                return self._parse_body(body)
            except urllib.error.HTTPError as exc:
                if exc.code in (429,) or exc.code >= 500:
                    last_error = exc
                    log.warning("transient HTTP %d from %s (attempt %d)", exc.code, self.endpoint, attempt + 1)
                    continue
                raise ClientError(f"HTTP {exc.code} from {self.endpoint}") from exc
            except (urllib.error.URLError, TimeoutError, ConnectionError) as exc:
                last_error = exc
                log.warning("transport error talking to %s (attempt %d): %s", self.endpoint, attempt + 1, exc)
        raise ClientError(f"client {self.model!r} unavailable after {RETRY_ATTEMPTS} attempts: {last_error}")

    @staticmethod
    def _parse_body(body: str) -> str:
        try:
            obj = json.loads(body)
            return obj["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise ClientError(f"malformed completion response: {exc}") from exc


def prompt_key(model: str, prompt: str) -> str:
    """Stable cache/replay key for a (model, prompt) pair."""
    digest = hashlib.sha256()
    digest.update(model.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(prompt.encode("utf-8"))
    return digest.hexdigest()


class ReplayClient(TextClient):
    """Replies from ``<dir>/<sha256(model NUL prompt)>.txt`` fixture files."""

    def __init__(self, directory: str, model: str = "replay"):
        self.directory = Path(directory)
        self.model = model

    def complete(self, prompt: str) -> str:
        path = self.directory / f"{prompt_key(self.model, prompt)}.txt"
        try:
            return path.read_text("utf-8")
        except OSError as exc:
            raise ClientError(f"no recorded reply for prompt (expected {path})") from exc

    def record(self, prompt: str, reply: str) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        atomic_write_text(self.directory / f"{prompt_key(self.model, prompt)}.txt", reply)


class ConstClient(TextClient):
    """Same reply for every prompt; the judge mock and canned code generator."""

    def __init__(self, reply: str, model: str = "const"):
        self.reply = reply
        self.model = model

    def complete(self, prompt: str) -> str:
        return self.reply


class ParaphraseClient(TextClient):
    """Deterministic stand-in for the variant generator.

    Extracts the anchor statement from a generation prompt, maps every token
    through a substitution dictionary (identity for unmapped tokens), and
    returns five lines; line i rotates the token order by i-1 so the
    variants differ superficially while sharing vocabulary.
    """

    def __init__(self, substitution: dict[str, str], model: str = "paraphrase"):
        self.substitution = dict(substitution)
        self.model = model

    def complete(self, prompt: str) -> str:
        description = extract_generate_description(prompt)
        mapped = [self.substitution.get(tok, tok) for tok in description.split()]
        if not mapped:
            raise ClientError("cannot paraphrase an empty statement")
        lines = []
        for ordinal in range(5):
            shift = ordinal % len(mapped)
            lines.append(" ".join(mapped[shift:] + mapped[:shift]))
        return "\n".join(lines)


class CachingClient(TextClient):
    """Wrap any client with a persistent prompt->reply cache directory."""

    def __init__(self, inner: TextClient, cache_dir: str):
        self.inner = inner
        self.model = inner.model
        self.cache_dir = Path(cache_dir)

    def complete(self, prompt: str) -> str:
        path = self.cache_dir / f"{prompt_key(self.model, prompt)}.txt"
        if path.exists():
            return path.read_text("utf-8")
        reply = self.inner.complete(prompt)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        atomic_write_text(path, reply)
        return reply
