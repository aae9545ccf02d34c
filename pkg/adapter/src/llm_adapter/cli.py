"""The llm-adapter executable.

Subcommands: ``serve`` (stdio by default, ``--http PORT`` for a server),
``judge`` for offline constraint equivalence judging, and ``render`` to
print the prompt a request would produce. Exit codes: 0 success, 1 usage
error, 2 config or data error, 3 engine unreachable (judge mode only;
serve answers engine failures in-band).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import AdapterConfig, ConfigError
from .engines import EngineError, make_engine
from .judge import JudgeError, judge
from .serve import build_http_server, serve_stdio
from .templates import TemplateError, context_for, render

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ENGINE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"llm-adapter: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(prog="llm-adapter", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("serve", help="answer wire requests (stdio or HTTP)")
    p.add_argument("--config", required=True, help="adapter INI file")
    p.add_argument("--http", type=int, metavar="PORT",
                   help="serve HTTP on this port instead of stdio")

    p = sub.add_parser("judge", help="judge predicted constraints against gold")
    p.add_argument("--config", required=True)
    p.add_argument("--gold", required=True, help="JSON array of gold constraints")
    p.add_argument("--pred", required=True, help="JSON array of predicted constraints")
    p.add_argument("--dsl", help="override the constraint language documentation block")
    p.add_argument("--out", help="write the judgment JSON here instead of stdout")

    p = sub.add_parser("render", help="print the prompt for one wire request")
    p.add_argument("--config", required=True)
    p.add_argument("--request", required=True, help="JSON request document file")
    return parser


def _load_strings(path: str) -> list[str]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, list) or not all(isinstance(t, str) for t in doc):
        raise ConfigError(f"{path}: expected a JSON array of strings")
    return doc


def cmd_serve(args) -> int:
    config = AdapterConfig.load(args.config)
    engine = make_engine(config)
    if args.http is None:
        serve_stdio(config, engine)
        return EXIT_OK
    server = build_http_server(config, engine, args.http)
    print(f"llm-adapter: serving on port {server.server_address[1]}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_judge(args) -> int:
    config = AdapterConfig.load(args.config)
    dsl_block = Path(args.dsl).read_text(encoding="utf-8") if args.dsl else None
    doc = judge(config, _load_strings(args.gold), _load_strings(args.pred), dsl_block)
    text = json.dumps(doc, indent=2, ensure_ascii=False)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"tp={doc['tp']} fp={doc['fp']} fn={doc['fn']}")
    else:
        print(text)
    return EXIT_OK


def cmd_render(args) -> int:
    config = AdapterConfig.load(args.config)
    request = json.loads(Path(args.request).read_text(encoding="utf-8"))
    if not isinstance(request, dict):
        raise ConfigError(f"{args.request}: expected a JSON request object")
    vocab = context_for(request)
    subtask = str(request.get("subtask", ""))
    template = config.template_text(subtask, profile=vocab["profile"] or None)
    print(render(template, vocab))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error("a subcommand is required")
    try:
        if args.command == "serve":
            return cmd_serve(args)
        if args.command == "judge":
            return cmd_judge(args)
        return cmd_render(args)
    except EngineError as exc:
        print(f"llm-adapter: engine: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except (ConfigError, TemplateError, JudgeError) as exc:
        print(f"llm-adapter: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, json.JSONDecodeError) as exc:
        print(f"llm-adapter: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
