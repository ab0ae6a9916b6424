"""A scripted local chat-completion endpoint for offline runs and tests.

The stub speaks just enough of the chat-completion protocol for the
verification client: POST <base>/chat/completions with a JSON body whose
last message holds the prompt. The reply is produced by a deterministic
rule over the prompt text; the default rule answers "Incorrect." when the
step under check contains the word "wrong" and "Correct." otherwise, so a
fixture can script its expected verdict table in plain text.

A queue of forced status codes makes retry behavior testable (e.g. two
429 responses before a 200). Every served completion is recorded on
``calls`` so tests can assert that a warm cache avoids the endpoint
entirely.

Run standalone:  python -m pathcalib.stubserver --port 8099
then:            export CALIB_LLM_BASE=http://127.0.0.1:8099
"""

from __future__ import annotations

import argparse
import json
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

_STEP_LINE_RE = re.compile(r"^Step under check:\s*(.*)$", re.MULTILINE)


def default_rule(prompt: str) -> str:
    """Scripted verdict: the checked step is wrong iff it says so."""
    match = _STEP_LINE_RE.search(prompt)
    step_text = match.group(1) if match else prompt
    return "Incorrect." if "wrong" in step_text.lower() else "Correct."


@dataclass
class StubEndpoint:
    """In-process HTTP stub; use as a context manager.

    rule:            prompt -> completion text
    forced_statuses: statuses served (and consumed) before real replies
    require_key:     reject requests without this bearer token
    """

    rule: Callable[[str], str] = default_rule
    forced_statuses: list[int] = field(default_factory=list)
    require_key: str | None = None
    calls: list[dict] = field(default_factory=list)

    def __post_init__(self) -> None:
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self) -> None:  # noqa: N802 (http.server API)
                if not self.path.endswith("/chat/completions"):
                    self._reply(404, {"error": "unknown route"})
                    return
                if stub.require_key is not None:
                    expected = f"Bearer {stub.require_key}"
                    if self.headers.get("Authorization") != expected:
                        self._reply(401, {"error": "bad credential"})
                        return
                if stub.forced_statuses:
                    status = stub.forced_statuses.pop(0)
                    self._reply(status, {"error": f"forced status {status}"})
                    return
                length = int(self.headers.get("Content-Length", "0"))
                body = json.loads(self.rfile.read(length) or b"{}")
                messages = body.get("messages") or [{}]
                prompt = messages[-1].get("content", "")
                completion = stub.rule(prompt)
                with stub._lock:
                    stub.calls.append(
                        {
                            "prompt": prompt,
                            "model": body.get("model"),
                            "temperature": body.get("temperature"),
                            "completion": completion,
                        }
                    )
                self._reply(
                    200,
                    {"choices": [{"message": {"role": "assistant", "content": completion}}]},
                )

            def _reply(self, status: int, payload: dict) -> None:
                data = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args) -> None:  # silence request logging
                pass

        self._lock = threading.Lock()
        self._handler = Handler
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    @property
    def call_count(self) -> int:
        return len(self.calls)

    @property
    def base_url(self) -> str:
        if self._server is None:
            raise RuntimeError("stub endpoint not started")
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self, port: int = 0) -> "StubEndpoint":
        self._server = ThreadingHTTPServer(("127.0.0.1", port), self._handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> "StubEndpoint":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="scripted chat-completion stub endpoint")
    parser.add_argument("--port", type=int, default=8099)
    args = parser.parse_args(argv)
    stub = StubEndpoint().start(port=args.port)
    print(f"stub endpoint listening on {stub.base_url} (Ctrl-C to stop)")
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        stub.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
