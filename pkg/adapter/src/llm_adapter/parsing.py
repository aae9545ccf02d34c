"""Model text to wire output schema.

The model is asked for one JSON object; models decorate it with prose and
code fences anyway. ``extract_json_block`` digs out the last parseable
JSON value; the per-subtask normalizers accept both the documented answer
shapes and close common variants (bare arrays, tool samples with
``tool_name``/``parameters``) and reject the rest. Anything unusable
becomes ``{"parse_failure": reason}``: still a schema-valid wire output,
scored as a failed case, never a crash.
"""

from __future__ import annotations

import json
import re
from typing import Any, Mapping, Optional

_FENCE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


def extract_json_block(text: str) -> Optional[Any]:
    """The last JSON object or array in the text, fenced blocks first."""
    if not isinstance(text, str) or not text.strip():
        return None
    for block in reversed(_FENCE.findall(text)):
        try:
            return json.loads(block)
        except json.JSONDecodeError:
            continue
    decoder = json.JSONDecoder()
    found = None
    i = 0
    while i < len(text):
        if text[i] in "{[":
            try:
                value, end = decoder.raw_decode(text, i)
            except json.JSONDecodeError:
                i += 1
                continue
            found = value
            i = end
        else:
            i += 1
    return found


def _failure(reason: str) -> dict:
    return {"parse_failure": reason}


def _norm_call(doc: Any) -> Optional[dict]:
    if not isinstance(doc, Mapping):
        return None
    if "tool" in doc or "tool_name" in doc:
        name = doc.get("tool", doc.get("tool_name"))
        args = doc.get("arguments", doc.get("parameters", []))
        if isinstance(args, Mapping):
            args = [{"name": str(k), "value": v} for k, v in args.items()]
        if not isinstance(args, list):
            return None
        out = []
        for arg in args:
            if not isinstance(arg, Mapping) or "name" not in arg:
                return None
            out.append({"name": str(arg["name"]), "value": arg.get("value")})
        return {"tool": str(name), "arguments": out}
    return None


def _constraints_output(doc: Any) -> dict:
    items = doc.get("constraints") if isinstance(doc, Mapping) else doc
    if not isinstance(items, list) or not all(isinstance(t, str) for t in items):
        return _failure("expected a JSON array of constraint strings")
    return {"constraints": items}


def _calls_output(doc: Any) -> dict:
    if isinstance(doc, Mapping):
        items = doc.get("calls", doc.get("samples"))
    else:
        items = doc
    if not isinstance(items, list):
        return _failure("expected a JSON array of tool calls")
    calls = []
    for item in items:
        call = _norm_call(item)
        if call is None:
            return _failure(f"unrecognized tool call entry: {item!r:.80}")
        calls.append(call)
    return {"calls": calls}


def _plan_output(doc: Any) -> dict:
    plan = doc.get("plan") if isinstance(doc, Mapping) and "plan" in doc else doc
    if not isinstance(plan, Mapping) or "days" not in plan:
        return _failure("expected a plan object with a days array")
    return {"plan": dict(plan)}


def _findings_output(doc: Any) -> dict:
    items = doc.get("findings") if isinstance(doc, Mapping) else doc
    if not isinstance(items, list):
        return _failure("expected a JSON array of findings")
    out = []
    for item in items:
        if isinstance(item, str):
            out.append({"category": item})
        elif isinstance(item, Mapping) and "category" in item:
            out.append(dict(item))
        else:
            return _failure(f"unrecognized finding entry: {item!r:.80}")
    return {"findings": out}


_NORMALIZERS = {
    "extraction": _constraints_output,
    "tool_use": _calls_output,
    "plan_gen": _plan_output,
    "identification": _findings_output,
    "correction": _plan_output,
}


def output_for(subtask: str, text: str) -> dict:
    """The wire output for one subtask from raw model text. Never raises."""
    normalize = _NORMALIZERS.get(subtask)
    if normalize is None:
        return _failure(f"unknown subtask: {subtask!r}")
    doc = extract_json_block(text)
    if doc is None:
        return _failure("no JSON value found in model output")
    return normalize(doc)


def validate_response(doc: Any) -> None:
    """Assert the wire response schema; called before every send."""
    if not isinstance(doc, Mapping):
        raise ValueError("response must be a JSON object")
    if not isinstance(doc.get("case_id"), str):
        raise ValueError("response case_id must be a string")
    if not isinstance(doc.get("output"), Mapping):
        raise ValueError("response output must be a JSON object")
    extra = set(doc) - {"case_id", "output"}
    if extra:
        raise ValueError(f"response carries unknown fields: {sorted(extra)}")
