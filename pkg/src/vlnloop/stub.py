"""Local conformance stub for the chat, VQA and caption wire formats.

Replies are canned; failures are injected per endpoint with :meth:`StubServer.inject`::

    with StubServer(chat_reply="Action: 0") as stub:
        stub.inject("/v1/chat/completions", 500, 500)
        HTTPChatBackend(stub.url, backoff=0).chat(...)
"""

from __future__ import annotations

import json
import threading
from collections import defaultdict, deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

CHAT_PATH = "/v1/chat/completions"

Reply = str | Callable[[dict], str]


class StubServer:
    def __init__(self, chat_reply: Reply = "Action: 0", vqa_reply: Reply = "no",
                 caption_reply: Reply = "a room", host: str = "127.0.0.1", port: int = 0):
        self.chat_reply = chat_reply
        self.vqa_reply = vqa_reply
        self.caption_reply = caption_reply
        self.requests: list[tuple[str, dict]] = []
        self._queued: dict[str, deque] = defaultdict(deque)
        self._lock = threading.Lock()
        self._server = ThreadingHTTPServer((host, port), self._handler())
        self._server.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def inject(self, path: str, *responses) -> None:
        """Queue responses served before the canned reply.

        Each response is an int status (empty JSON error body) or a
        ``(status, raw_body_bytes)`` pair.
        """
        with self._lock:
            for r in responses:
                self._queued[path].append(r if isinstance(r, tuple) else (r, b'{"error": "injected"}'))

    def count(self, path: str) -> int:
        with self._lock:
            return sum(1 for p, _ in self.requests if p == path)

    def start(self) -> StubServer:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._thread is not None:
            self._server.shutdown()
            self._thread = None
        self._server.server_close()

    def __enter__(self) -> StubServer:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def _reply(self, path: str, body: dict) -> tuple[int, bytes]:
        with self._lock:
            self.requests.append((path, body))
            if self._queued[path]:
                return self._queued[path].popleft()
        if path == CHAT_PATH:
            text = self.chat_reply(body) if callable(self.chat_reply) else self.chat_reply
            doc = {"id": "stub", "object": "chat.completion",
                   "choices": [{"index": 0, "finish_reason": "stop",
                                "message": {"role": "assistant", "content": text}}]}
        elif path == "/vqa":
            doc = {"answer": self.vqa_reply(body) if callable(self.vqa_reply) else self.vqa_reply}
        elif path == "/caption":
            doc = {"caption": self.caption_reply(body) if callable(self.caption_reply) else self.caption_reply}
        else:
            return 404, b'{"error": "not found"}'
        return 200, json.dumps(doc).encode()

    def _handler(self):
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length)
                try:
                    body = json.loads(raw or b"{}")
                except ValueError:
                    body = {}
                status, payload = stub._reply(self.path, body)
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        return Handler
