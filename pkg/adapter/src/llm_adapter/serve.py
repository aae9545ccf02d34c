"""The serving loop: wire requests in, schema-valid responses out.

``respond`` handles one request and never raises: template problems,
engine failures, and unparseable model output all come back as a
``parse_failure`` output the harness scores as a failed case. The stdio
loop answers one JSON request per line until stdin closes, which covers
both the harness's spawn-per-case transport and batch piping. The HTTP
server answers POSTed requests, one at a time per connection, any number
of connections.
"""

from __future__ import annotations

import json
import sys
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Mapping

from .engines import EngineError
from .parsing import output_for, validate_response
from .templates import TemplateError, context_for, render


def respond(config, engine, request: Mapping[str, Any]) -> dict:
    case_id = str(request.get("case_id", ""))
    subtask = request.get("subtask")
    if subtask not in config.enabled_subtasks:
        output = {"parse_failure": f"no template enabled for subtask {subtask!r}"}
    else:
        try:
            vocab = context_for(request)
            template = config.template_text(subtask, profile=vocab["profile"] or None)
            prompt = render(template, vocab)
            text = engine.complete(prompt, request)
            output = output_for(subtask, text)
        except (TemplateError, EngineError) as exc:
            output = {"parse_failure": str(exc)}
    response = {"case_id": case_id, "output": output}
    validate_response(response)
    return response


def serve_stdio(config, engine, *, stdin=None, stdout=None) -> int:
    """Answer line-JSON requests until EOF. Returns the count served."""
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    served = 0
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request must be a JSON object")
        except (json.JSONDecodeError, ValueError) as exc:
            response = {"case_id": "", "output": {"parse_failure": str(exc)}}
        else:
            response = respond(config, engine, request)
        stdout.write(json.dumps(response, sort_keys=True) + "\n")
        stdout.flush()
        served += 1
    return served


def build_http_server(config, engine, port: int) -> ThreadingHTTPServer:
    """An HTTP server answering POSTed wire requests on any path."""

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):  # noqa: N802 (http.server API)
            length = int(self.headers.get("Content-Length", 0))
            body = self.rfile.read(length)
            try:
                request = json.loads(body.decode("utf-8"))
                if not isinstance(request, dict):
                    raise ValueError("request must be a JSON object")
            except (json.JSONDecodeError, UnicodeDecodeError, ValueError) as exc:
                self._send(400, {"case_id": "", "output": {"parse_failure": str(exc)}})
                return
            self._send(200, respond(config, engine, request))

        def _send(self, status: int, doc: dict) -> None:
            payload = json.dumps(doc, sort_keys=True).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, fmt, *args):
            print(f"llm-adapter: {fmt % args}", file=sys.stderr)

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)
