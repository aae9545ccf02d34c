"""Template loading and rendering.

Templates are plain text with ``$name`` placeholders (``string.Template``
syntax, so literal JSON braces need no escaping). Leading lines starting
with ``#:`` are header notes stripped at load; reconstructed prompts are
marked that way. ``context_for`` flattens a wire request into the full
placeholder vocabulary; every name is always present (empty when the
subtask has no such input), so any template restricted to the vocabulary
renders for any request.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from string import Template
from typing import Any, Mapping


class TemplateError(Exception):
    """A template failed to load or render."""


def load_template_text(ref: str, base_dir) -> str:
    if ref.startswith("pkg:"):
        name = ref[len("pkg:"):]
        try:
            text = (
                resources.files("llm_adapter")
                .joinpath("templates", name)
                .read_text(encoding="utf-8")
            )
        except (FileNotFoundError, OSError) as exc:
            raise TemplateError(f"packaged template not found: {name}") from exc
    else:
        path = Path(base_dir) / ref
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise TemplateError(f"template file not readable: {path}") from exc
    lines = text.splitlines()
    while lines and lines[0].startswith("#:"):
        lines.pop(0)
    return "\n".join(lines).lstrip("\n")


def render(template_text: str, mapping: Mapping[str, str]) -> str:
    try:
        return Template(template_text).substitute(mapping)
    except KeyError as exc:
        raise TemplateError(f"template references unknown placeholder {exc}") from exc
    except ValueError as exc:
        raise TemplateError(f"bad placeholder syntax: {exc}") from exc


def _dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, ensure_ascii=False)


def _tools_desc(tools: Any) -> str:
    if not isinstance(tools, list):
        return ""
    lines = []
    for tool in tools:
        if not isinstance(tool, Mapping):
            continue
        params = ", ".join(
            f"{p.get('name')}: {p.get('type')}" for p in tool.get("params", [])
        )
        lines.append(f"{tool.get('name')}({params}) -> {tool.get('result_kind')}")
    return "\n".join(lines)


def _block(items: Any, prefix: str = "- ") -> str:
    if not isinstance(items, list):
        return ""
    return "\n".join(f"{prefix}{it if isinstance(it, str) else _dumps(it)}" for it in items)


def _dsl_reference() -> str:
    return load_template_text("pkg:dsl_reference.txt", Path("."))


def context_for(request: Mapping[str, Any]) -> dict[str, str]:
    """The full placeholder vocabulary for one wire request."""
    inputs = request.get("inputs")
    inputs = dict(inputs) if isinstance(inputs, Mapping) else {}
    query = inputs.get("query")
    query = dict(query) if isinstance(query, Mapping) else {}
    destinations = [str(c) for c in query.get("destinations", [])]
    dates = [str(d) for d in query.get("dates", [])]
    origin = str(query.get("origin", ""))
    context = inputs.get("context")
    context = dict(context) if isinstance(context, Mapping) else {}
    records = context.get("records", [])

    vocab = {
        "case_id": str(request.get("case_id", "")),
        "subtask": str(request.get("subtask", "")),
        "protocol": str(request.get("protocol", "")),
        "query_id": str(query.get("id", "")),
        "query_text": str(query.get("text", "")),
        "query_json": _dumps(query),
        "origin": origin,
        "destination": destinations[0] if destinations else "",
        "destinations": ", ".join(destinations),
        "cities": ", ".join([origin] + destinations if origin else destinations),
        "dates": ", ".join(dates),
        "date_first": dates[0] if dates else "",
        "date_last": dates[-1] if dates else "",
        "days": str(len(dates)),
        "people": str(query.get("people", "")),
        "profile": str(query.get("profile", "")),
        "constraints_block": _block(inputs.get("constraints")),
        "constraints_json": _dumps(inputs.get("constraints", [])),
        "context_level": str(context.get("level", "")),
        "context_json": _dumps(context),
        "records_json": _dumps(records),
        "records_count": str(len(records) if isinstance(records, list) else 0),
        "plan_json": _dumps(inputs.get("plan", {})),
        "findings_json": _dumps(inputs.get("findings", [])),
        "findings_block": _block(inputs.get("findings")),
        "tools_desc": _tools_desc(inputs.get("tools")),
        "tools_json": _dumps(inputs.get("tools", [])),
        "gold_json": _dumps(request["gold"]) if "gold" in request else "",
        "dsl_reference": _dsl_reference(),
    }
    return vocab
