"""HTTP clients for hosted or local model servers.

Chat uses the chat-completions wire format::

    POST {base}/v1/chat/completions
    {"model": ..., "messages": [{"role": ..., "content": ...}], "temperature": ...}
    -> {"choices": [{"message": {"content": "..."}}]}

VQA and captioning have no common standard; these clients speak::

    POST {base}/vqa      {"image_b64": ..., "question": ...} -> {"answer": ...}
    POST {base}/caption  {"image_b64": ...}                  -> {"caption": ...}
"""

from __future__ import annotations

import base64
import logging
import os
import time
from pathlib import Path
from typing import Any, Callable, Sequence

import httpx

from ..errors import BackendFailure
from ..messages import ChatMessage, FixtureKey
from ..perception import DirectionalCell
from .base import LoggedBackend, phase_of
from .calllog import CallLog

log = logging.getLogger(__name__)

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


class _HTTPBackend(LoggedBackend):
    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        *,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff: float = 0.5,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
        log: CallLog | None = None,
    ):
        super().__init__(log)
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.max_retries = max_retries
        self.backoff = backoff
        self.client = client if client is not None else httpx.Client(timeout=timeout)
        self.sleep = sleep

    def _post(self, path: str, payload: dict, phase: str, key) -> dict[str, Any]:
        url = self.base_url + path
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        started = time.perf_counter()
        attempts = 0
        last_error = ""
        status = None
        while attempts <= self.max_retries:
            if attempts:
                self.sleep(self.backoff * 2 ** (attempts - 1))
            attempts += 1
            try:
                resp = self.client.post(url, json=payload, headers=headers)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                last_error, status = f"{type(exc).__name__}: {exc}", None
                log.warning("%s attempt %d failed: %s", url, attempts, last_error)
                continue
            status = resp.status_code
            if status in RETRYABLE_STATUS:
                last_error = f"HTTP {status}"
                log.warning("%s attempt %d returned %d", url, attempts, status)
                continue
            if status >= 400:
                self._record(phase, key, url, started, attempts, ok=False)
                raise BackendFailure(f"{url}: HTTP {status}", status=status, attempts=attempts)
            try:
                body = resp.json()
            except ValueError:
                self._record(phase, key, url, started, attempts, ok=False)
                raise BackendFailure(f"{url}: response is not JSON", status=status, attempts=attempts) from None
            self._record(phase, key, url, started, attempts)
            return body
        self._record(phase, key, url, started, attempts, ok=False)
        raise BackendFailure(f"{url}: {last_error} after {attempts} attempts", status=status, attempts=attempts)

    @staticmethod
    def _image_b64(image_ref: str | None) -> str:
        if not image_ref:
            raise BackendFailure("cell has no image_ref to send")
        try:
            return base64.b64encode(Path(image_ref).read_bytes()).decode("ascii")
        except OSError as exc:
            raise BackendFailure(f"cannot read image {image_ref}: {exc}") from None

    def close(self) -> None:
        self.client.close()


class HTTPChatBackend(_HTTPBackend):
    slot = "chat"

    def __init__(self, base_url: str, api_key: str | None = None, *, model: str = "gpt-4",
                 temperature: float = 0.0, **kwargs):
        super().__init__(base_url, api_key, **kwargs)
        self.model = model
        self.temperature = temperature

    def chat(self, messages: Sequence[ChatMessage], *, key: FixtureKey | None = None) -> str:
        if not messages:
            raise ValueError("chat needs at least one message")
        payload = {
            "model": self.model,
            "messages": [m.to_dict() for m in messages],
            "temperature": self.temperature,
        }
        body = self._post("/v1/chat/completions", payload, phase_of(key), key)
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise BackendFailure(f"malformed completion body: {str(body)[:200]}") from None
        if not isinstance(content, str):
            raise BackendFailure("completion content is not a string")
        return content


class HTTPVQABackend(_HTTPBackend):
    slot = "vqa"

    def vqa(self, cell: DirectionalCell, question: str, *, key: FixtureKey | None = None) -> str:
        if not question:
            raise ValueError("question must be non-empty")
        payload = {"image_b64": self._image_b64(cell.image_ref), "question": question}
        body = self._post("/vqa", payload, "vqa", key)
        answer = body.get("answer") if isinstance(body, dict) else None
        if not isinstance(answer, str):
            raise BackendFailure(f"malformed vqa body: {str(body)[:200]}")
        return answer


class HTTPCaptionBackend(_HTTPBackend):
    slot = "caption"

    def caption(self, image_ref: str) -> str:
        body = self._post("/caption", {"image_b64": self._image_b64(image_ref)}, "caption", None)
        text = body.get("caption") if isinstance(body, dict) else None
        if not isinstance(text, str):
            raise BackendFailure(f"malformed caption body: {str(body)[:200]}")
        return text


def chat_from_env(**kwargs) -> HTTPChatBackend:
    url = os.environ.get("TINA_CHAT_URL")
    if not url:
        raise BackendFailure("TINA_CHAT_URL is not set")
    return HTTPChatBackend(url, os.environ.get("TINA_CHAT_KEY"), **kwargs)


def vqa_from_env(**kwargs) -> HTTPVQABackend:
    url = os.environ.get("TINA_VQA_URL")
    if not url:
        raise BackendFailure("TINA_VQA_URL is not set")
    return HTTPVQABackend(url, **kwargs)


def caption_from_env(**kwargs) -> HTTPCaptionBackend:
    url = os.environ.get("TINA_VQA_URL")
    if not url:
        raise BackendFailure("TINA_VQA_URL is not set")
    return HTTPCaptionBackend(url, **kwargs)
